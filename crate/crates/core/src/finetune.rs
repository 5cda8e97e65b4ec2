//! Fine-tuning dataset construction from a manually written testsuite.
//!
//! Each test file becomes one `{"prompt": ..., "completion": ...}` line: the
//! prompt requests a validation test for the feature and embeds the most
//! relevant spec section as context; the completion is the test source,
//! byte-identical. Templates and one-shot examples are deliberately absent
//! from these prompts.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::corpus::SpecIndex;
use crate::lang::Language;
use crate::retrieval::{embed, EmbeddingProvider, RetrievalDb, RetrievalError};

#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("cannot pair test with a section: the spec index is empty")]
    NoMatch,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One training example. Field order is load-bearing: lines serialize with
/// `prompt` before `completion`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneExample {
    pub prompt: String,
    pub completion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub total: usize,
    pub per_language: BTreeMap<Language, usize>,
    pub spec_digest: String,
}

/// What the prompt's context block holds: the full paired section, or the
/// top-k similarity chunks for the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    FullSection,
    Similarity { k: usize },
}

/// Default prompt frame: the retrieval-augmented request without any
/// template block.
pub const DEFAULT_FRAME: &str = "Write a code in {language} to verify compiler implementation of the OpenACC specification of the {feature}.\n\nContext: {context}\n";

/// Find the spec section to use as context for one test. A resolvable
/// feature hint (key or unambiguous title) wins; otherwise the section
/// containing the top-1 similarity chunk for the hint (or, with no hint, the
/// test source itself) is used.
pub fn pair_test_with_section<F: Float>(
    test_source: &str,
    feature_hint: &str,
    index: &SpecIndex,
    db: &RetrievalDb<F>,
    provider: &EmbeddingProvider,
) -> Result<String, FinetuneError> {
    if index.is_empty() {
        return Err(FinetuneError::NoMatch);
    }
    if let Some(key) = index.resolve_key(feature_hint) {
        return Ok(key.to_string());
    }
    let query_text = if feature_hint.trim().is_empty() {
        test_source
    } else {
        feature_hint
    };
    let query = embed::<F>(query_text, provider)?;
    let hits = db.search(&query, 1)?;
    let section = hits
        .first()
        .and_then(|hit| index.section_at_offset(db.chunks[hit.chunk_id].span.0))
        .or_else(|| index.sections().next())
        .ok_or(FinetuneError::NoMatch)?;
    Ok(section.key.clone())
}

/// Sidecar file mapping test file names to feature hints.
pub const SIDECAR_NAME: &str = "features.json";

/// Build one example per test file under `suite_dir` (recursively, sorted by
/// path). Languages are detected by extension; unreadable or non-UTF-8 files
/// are skipped with a warning and excluded from the counts.
pub fn build_dataset<F: Float>(
    suite_dir: &Path,
    index: &SpecIndex,
    db: &RetrievalDb<F>,
    provider: &EmbeddingProvider,
    frame: &str,
    context_mode: ContextMode,
) -> Result<(Vec<FinetuneExample>, DatasetManifest), FinetuneError> {
    let hints: BTreeMap<String, String> = {
        let sidecar = suite_dir.join(SIDECAR_NAME);
        if sidecar.is_file() {
            serde_json::from_slice(&std::fs::read(&sidecar)?).unwrap_or_else(|e| {
                log::warn!("ignoring malformed {SIDECAR_NAME}: {e}");
                BTreeMap::new()
            })
        } else {
            BTreeMap::new()
        }
    };

    let mut paths: Vec<_> = WalkDir::new(suite_dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| Language::from_path(p).is_some())
        .collect();
    paths.sort();

    let mut examples = Vec::new();
    let mut per_language: BTreeMap<Language, usize> = BTreeMap::new();
    for path in paths {
        let language = Language::from_path(&path).expect("filtered by extension");
        let source = match std::fs::read_to_string(&path) {
            Ok(source) => source,
            Err(e) => {
                log::warn!("skipping unreadable test {}: {e}", path.display());
                continue;
            }
        };
        let file_name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let hint = hints.get(&file_name).cloned().unwrap_or_default();
        let section_key = pair_test_with_section(&source, &hint, index, db, provider)?;
        let section = index.get(&section_key).ok_or(FinetuneError::NoMatch)?;

        let feature = if !section.title.is_empty() {
            crate::prompt::feature_display(index, &section_key, &section.title)
        } else if !hint.is_empty() {
            hint.clone()
        } else {
            file_stem_words(&path)
        };

        let context = match context_mode {
            ContextMode::FullSection => section.body.clone(),
            ContextMode::Similarity { k } => {
                let query = embed::<F>(&feature, provider)?;
                db.search(&query, k)?
                    .iter()
                    .map(|h| h.text.as_str())
                    .collect::<Vec<_>>()
                    .join("\n\n")
            }
        };

        examples.push(FinetuneExample {
            prompt: frame
                .replace("{language}", &language.to_string())
                .replace("{feature}", &feature)
                .replace("{context}", &context),
            completion: source,
        });
        *per_language.entry(language).or_default() += 1;
    }

    let manifest = DatasetManifest {
        total: examples.len(),
        per_language,
        spec_digest: index.source_digest.clone(),
    };
    Ok((examples, manifest))
}

fn file_stem_words(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().replace(['_', '-'], " "))
        .unwrap_or_default()
}

/// Write one JSON object per line with exactly the keys `prompt` and
/// `completion`, in that order, newline-terminated.
pub fn emit_jsonl(examples: &[FinetuneExample], out: &Path) -> Result<(), FinetuneError> {
    crate::util::write_jsonl(out, examples)?;
    Ok(())
}

/// Parse a dataset back; the inverse of [`emit_jsonl`].
pub fn load_jsonl(path: &Path) -> Result<Vec<FinetuneExample>, FinetuneError> {
    Ok(crate::util::read_jsonl(path)?)
}
