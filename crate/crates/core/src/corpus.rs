//! Specification ingestion: parse a ToC-structured text into a keyed section
//! index supporting exact lookup and JSON export.
//!
//! The index maps table-of-contents keys ("2.5.1") to the section bodies that
//! follow each heading. Section bodies exclude the heading line itself so
//! retrieved context carries no numbering noise.

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::util::sha256_hex;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate ToC key: {0}")]
    DuplicateKey(String),
    #[error("no headings found in input text")]
    NoHeadingsFound,
    #[error("heading offset {offset} out of range for text of length {len}")]
    OffsetOutOfRange { offset: usize, len: usize },
    #[error("unknown section key: {0}")]
    UnknownKey(String),
    #[error("invalid heading pattern: {0}")]
    BadPattern(#[from] regex::Error),
    #[error("malformed spec index JSON: {0}")]
    BadIndexJson(#[from] serde_json::Error),
}

/// Line pattern that recognizes headings. The regex must expose two capture
/// groups: the dotted key and the title. The first key segment must parse as
/// an integer (the chapter number); lines where it does not are treated as
/// body text.
#[derive(Debug, Clone)]
pub struct HeadingPattern {
    regex: Regex,
}

impl HeadingPattern {
    /// Line-initial dotted-number key followed by a title,
    /// e.g. `2.5.1 Parallel Construct`.
    pub const DEFAULT: &'static str = r"^([0-9]+(?:\.[0-9]+)*)[ \t]+(\S.*)$";

    pub fn new(pattern: &str) -> Result<Self, CorpusError> {
        Ok(Self {
            regex: Regex::new(pattern)?,
        })
    }

    fn match_line<'a>(&self, line: &'a str) -> Option<(&'a str, &'a str)> {
        let caps = self.regex.captures(line)?;
        let key = caps.get(1)?.as_str();
        let title = caps.get(2)?.as_str();
        Some((key, title))
    }
}

impl Default for HeadingPattern {
    fn default() -> Self {
        Self::new(Self::DEFAULT).expect("default heading pattern compiles")
    }
}

/// One table-of-contents entry located in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TocEntry {
    pub key: String,
    pub title: String,
    pub chapter: u32,
    /// Dot count of the key plus one.
    pub depth: usize,
    /// Byte offset of the heading line in the source text.
    pub char_offset: usize,
}

/// A specification section: the text from its heading to the next heading at
/// any depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecSection {
    pub key: String,
    pub title: String,
    /// Section text, heading line excluded.
    pub body: String,
    /// Byte span in the source text: heading start to next heading start.
    pub span: (usize, usize),
}

/// Ordered map from ToC keys to sections, in document order.
#[derive(Debug, Clone)]
pub struct SpecIndex {
    sections: IndexMap<String, SpecSection>,
    /// Lowercased title -> key, for titles that resolve unambiguously.
    title_alias: HashMap<String, String>,
    pub source_digest: String,
}

impl SpecIndex {
    pub fn sections(&self) -> impl Iterator<Item = &SpecSection> {
        self.sections.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.sections.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&SpecSection> {
        self.sections.get(key)
    }

    /// Resolve a key or, failing that, a section title (case-insensitive,
    /// unambiguous titles only) to its key.
    pub fn resolve_key(&self, key_or_title: &str) -> Option<&str> {
        if let Some((k, _)) = self.sections.get_key_value(key_or_title) {
            return Some(k.as_str());
        }
        self.title_alias
            .get(&key_or_title.to_lowercase())
            .map(String::as_str)
    }

    /// Digest over keys and bodies, independent of how the index was built.
    pub fn content_digest(&self) -> String {
        let mut buf = Vec::new();
        for s in self.sections.values() {
            buf.extend_from_slice(s.key.as_bytes());
            buf.push(0);
            buf.extend_from_slice(s.body.as_bytes());
            buf.push(0);
        }
        sha256_hex(&buf)
    }

    /// Section containing the given source byte offset, if any.
    pub fn section_at_offset(&self, offset: usize) -> Option<&SpecSection> {
        self.sections
            .values()
            .find(|s| s.span.0 <= offset && offset < s.span.1)
    }

    fn rebuild_aliases(&mut self) {
        let mut alias: HashMap<String, Option<String>> = HashMap::new();
        for s in self.sections.values() {
            let t = s.title.to_lowercase();
            if t.is_empty() {
                continue;
            }
            alias
                .entry(t)
                .and_modify(|v| *v = None) // ambiguous titles resolve to nothing
                .or_insert_with(|| Some(s.key.clone()));
        }
        self.title_alias = alias
            .into_iter()
            .filter_map(|(t, k)| k.map(|k| (t, k)))
            .collect();
    }
}

/// Scan the source text for heading lines and return ToC entries in document
/// order. Keys must be unique.
pub fn parse_toc(
    source_text: &str,
    pattern: &HeadingPattern,
) -> Result<Vec<TocEntry>, CorpusError> {
    let mut entries: Vec<TocEntry> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut offset = 0usize;
    for line in source_text.split_inclusive('\n') {
        let trimmed = line.strip_suffix('\n').unwrap_or(line);
        let trimmed = trimmed.strip_suffix('\r').unwrap_or(trimmed);
        if let Some((key, title)) = pattern.match_line(trimmed) {
            let first_seg = key.split('.').next().unwrap_or("");
            if let Ok(chapter) = first_seg.parse::<u32>() {
                if seen.insert(key.to_string(), ()).is_some() {
                    return Err(CorpusError::DuplicateKey(key.to_string()));
                }
                entries.push(TocEntry {
                    key: key.to_string(),
                    title: title.to_string(),
                    chapter,
                    depth: key.matches('.').count() + 1,
                    char_offset: offset,
                });
            }
        }
        offset += line.len();
    }
    if entries.is_empty() {
        return Err(CorpusError::NoHeadingsFound);
    }
    Ok(entries)
}

/// Slice the source text into sections. Section i runs from the end of
/// heading line i to the start of heading i+1; the last section runs to the
/// end of the text.
pub fn slice_sections(source_text: &str, toc: &[TocEntry]) -> Result<SpecIndex, CorpusError> {
    let len = source_text.len();
    let mut sections = IndexMap::with_capacity(toc.len());
    for (i, entry) in toc.iter().enumerate() {
        if entry.char_offset >= len || !source_text.is_char_boundary(entry.char_offset) {
            return Err(CorpusError::OffsetOutOfRange {
                offset: entry.char_offset,
                len,
            });
        }
        let heading_end = source_text[entry.char_offset..]
            .find('\n')
            .map(|p| entry.char_offset + p + 1)
            .unwrap_or(len);
        let next_start = toc.get(i + 1).map(|e| e.char_offset).unwrap_or(len);
        if next_start > len || next_start < entry.char_offset {
            return Err(CorpusError::OffsetOutOfRange {
                offset: next_start,
                len,
            });
        }
        let body_start = heading_end.min(next_start);
        sections.insert(
            entry.key.clone(),
            SpecSection {
                key: entry.key.clone(),
                title: entry.title.clone(),
                body: source_text[body_start..next_start].to_string(),
                span: (entry.char_offset, next_start),
            },
        );
    }
    let mut index = SpecIndex {
        sections,
        title_alias: HashMap::new(),
        source_digest: sha256_hex(source_text.as_bytes()),
    };
    index.rebuild_aliases();
    Ok(index)
}

/// Parse and slice in one step.
pub fn ingest(source_text: &str, pattern: &HeadingPattern) -> Result<SpecIndex, CorpusError> {
    let toc = parse_toc(source_text, pattern)?;
    slice_sections(source_text, &toc)
}

/// Exact lookup by key (or unambiguous title). The returned body is
/// byte-identical to what slicing produced.
pub fn lookup_section<'a>(
    index: &'a SpecIndex,
    feature_key: &str,
) -> Result<&'a SpecSection, CorpusError> {
    let key = index
        .resolve_key(feature_key)
        .ok_or_else(|| CorpusError::UnknownKey(feature_key.to_string()))?;
    Ok(&index.sections[key])
}

/// Serialize the index as one top-level JSON object mapping key to body,
/// keys in document order.
pub fn export_spec_json(index: &SpecIndex) -> Vec<u8> {
    let map: IndexMap<&str, &str> = index
        .sections
        .values()
        .map(|s| (s.key.as_str(), s.body.as_str()))
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&map).expect("string map serializes");
    bytes.push(b'\n');
    bytes
}

/// Rebuild an index from exported JSON. Titles and source spans are not part
/// of the export; imported sections carry empty titles and synthetic spans.
pub fn import_spec_json(bytes: &[u8]) -> Result<SpecIndex, CorpusError> {
    let map: IndexMap<String, String> = serde_json::from_slice(bytes)?;
    let mut sections = IndexMap::with_capacity(map.len());
    let mut offset = 0usize;
    for (key, body) in map {
        let end = offset + body.len();
        sections.insert(
            key.clone(),
            SpecSection {
                key,
                title: String::new(),
                body,
                span: (offset, end),
            },
        );
        offset = end;
    }
    Ok(SpecIndex {
        sections,
        title_alias: HashMap::new(),
        source_digest: sha256_hex(bytes),
    })
}
