//! Cut a compilable test out of raw model output, or label the output a
//! parsing error.
//!
//! Extraction rules, in order:
//!
//! 1. If the output contains at least one complete fenced block (opening and
//!    closing triple back-ticks), return the first block whose content
//!    carries a marker of the requested language. Fence lines and their info
//!    strings are discarded.
//! 2. Otherwise, if the text contains a language-appropriate terminating
//!    construct (a `return` statement for C/C++; an `END` line for Fortran),
//!    return the lines from the first code-like line through that terminator.
//! 3. Otherwise the output is a parsing error.
//!
//! Surrounding prose is always discarded and truncated code is never
//! repaired.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{FinishReason, GenerationRecord};
use crate::lang::Language;
use crate::prompt::PromptRecord;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("generation references unknown prompt id {0}")]
    DanglingPromptId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMode {
    Fenced,
    Heuristic,
}

/// A compilable test recovered from raw output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedTest {
    pub prompt_id: String,
    pub code: String,
    pub language: Language,
    pub extraction_mode: ExtractionMode,
}

/// Outcome of extraction for one generation. A parsing error is a value, not
/// a fault: it is one of the four evaluation outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtractionOutcome {
    Ok { test: ExtractedTest },
    ParsingError { prompt_id: String, reason: String },
}

impl ExtractionOutcome {
    pub fn prompt_id(&self) -> &str {
        match self {
            ExtractionOutcome::Ok { test } => &test.prompt_id,
            ExtractionOutcome::ParsingError { prompt_id, .. } => prompt_id,
        }
    }

    pub fn as_test(&self) -> Option<&ExtractedTest> {
        match self {
            ExtractionOutcome::Ok { test } => Some(test),
            ExtractionOutcome::ParsingError { .. } => None,
        }
    }

    pub fn is_parsing_error(&self) -> bool {
        matches!(self, ExtractionOutcome::ParsingError { .. })
    }
}

fn is_fence_line(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn matches_language(content: &str, language: Language) -> bool {
    match language {
        Language::C | Language::Cpp => content.contains("#include") || content.contains("int main"),
        Language::Fortran => {
            let upper = content.to_uppercase();
            upper.contains("PROGRAM") || upper.contains("FUNCTION") || upper.contains("SUBROUTINE")
        }
    }
}

fn is_code_like(line: &str, language: Language) -> bool {
    let trimmed = line.trim_start();
    match language {
        Language::C | Language::Cpp => {
            const STARTS: [&str; 17] = [
                "#include",
                "#pragma",
                "#define",
                "#ifndef",
                "#ifdef",
                "#if ",
                "int ",
                "void ",
                "float ",
                "double ",
                "char ",
                "long ",
                "unsigned ",
                "static ",
                "struct ",
                "typedef ",
                "/*",
            ];
            STARTS.iter().any(|s| trimmed.starts_with(s)) || trimmed.contains("int main")
        }
        Language::Fortran => {
            let upper = trimmed.to_uppercase();
            const STARTS: [&str; 12] = [
                "PROGRAM ",
                "MODULE ",
                "SUBROUTINE ",
                "FUNCTION ",
                "LOGICAL FUNCTION",
                "INTEGER FUNCTION",
                "REAL FUNCTION",
                "USE ",
                "IMPLICIT ",
                "INCLUDE ",
                "!",
                "&",
            ];
            STARTS.iter().any(|s| upper.starts_with(s))
        }
    }
}

/// A `return <expr>;` somewhere on the line, possibly followed by closing
/// braces ("return failcode;}" ends many generated tests).
fn is_c_terminator(line: &str) -> bool {
    if let Some(pos) = find_word(line, "return") {
        line[pos + "return".len()..].contains(';')
    } else {
        false
    }
}

fn find_word(line: &str, word: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut from = 0;
    while let Some(rel) = line[from..].find(word) {
        let start = from + rel;
        let end = start + word.len();
        let before_ok = start == 0 || !(bytes[start - 1] as char).is_alphanumeric();
        let after_ok = end == line.len() || !(bytes[end] as char).is_alphanumeric();
        if before_ok && after_ok {
            return Some(start);
        }
        from = end;
    }
    None
}

fn is_fortran_terminator(line: &str) -> bool {
    let upper = line.trim().to_uppercase();
    upper == "END"
        || upper.starts_with("END PROGRAM")
        || upper.starts_with("END FUNCTION")
        || upper.starts_with("END SUBROUTINE")
        || upper.starts_with("END MODULE")
}

/// A line we may append after the C terminator: closing braces or
/// preprocessor epilogue.
fn is_c_trailer(line: &str) -> bool {
    let trimmed = line.trim();
    trimmed == "#endif" || (!trimmed.is_empty() && trimmed.chars().all(|c| c == '}'))
}

fn join_lines(lines: &[&str]) -> String {
    let mut code = lines.join("\n");
    if !code.ends_with('\n') {
        code.push('\n');
    }
    code
}

/// Extract a test from raw output per the module rules.
pub fn extract_code(raw: &str, language: Language, prompt_id: &str) -> ExtractionOutcome {
    let lines: Vec<&str> = raw.lines().collect();

    // rule 1: first complete fenced block whose content matches the language
    let mut open: Option<usize> = None;
    for (i, line) in lines.iter().enumerate() {
        if !is_fence_line(line) {
            continue;
        }
        match open.take() {
            None => open = Some(i),
            Some(start) => {
                let content = &lines[start + 1..i];
                let code = join_lines(content);
                if !content.is_empty() && matches_language(&code, language) {
                    return ExtractionOutcome::Ok {
                        test: ExtractedTest {
                            prompt_id: prompt_id.to_string(),
                            code,
                            language,
                            extraction_mode: ExtractionMode::Fenced,
                        },
                    };
                }
            }
        }
    }

    // rule 2: unfenced code ending in a terminating construct. Fence-marker
    // lines (from incomplete or non-matching blocks) are dropped so extracted
    // code never carries back-ticks.
    let body: Vec<&str> = lines.into_iter().filter(|l| !is_fence_line(l)).collect();
    let first_code = body.iter().position(|l| is_code_like(l, language));
    let last_term = match language {
        Language::C | Language::Cpp => body.iter().rposition(|l| is_c_terminator(l)),
        Language::Fortran => body.iter().rposition(|l| is_fortran_terminator(l)),
    };
    if let (Some(start), Some(term)) = (first_code, last_term) {
        if term >= start {
            let mut end = term;
            if language != Language::Fortran {
                while end + 1 < body.len() && is_c_trailer(body[end + 1]) {
                    end += 1;
                }
            }
            return ExtractionOutcome::Ok {
                test: ExtractedTest {
                    prompt_id: prompt_id.to_string(),
                    code: join_lines(&body[start..=end]),
                    language,
                    extraction_mode: ExtractionMode::Heuristic,
                },
            };
        }
    }

    ExtractionOutcome::ParsingError {
        prompt_id: prompt_id.to_string(),
        reason: "no code terminator found".to_string(),
    }
}

/// Extract every generation of a suite, in order. Failed generations become
/// parsing errors; truncated generations still attempt extraction, and the
/// truncation is noted when extraction fails anyway.
pub fn extract_suite(
    generations: &[GenerationRecord],
    prompts: &[PromptRecord],
) -> Result<Vec<ExtractionOutcome>, ExtractError> {
    let by_id: std::collections::HashMap<&str, &PromptRecord> =
        prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut outcomes = Vec::with_capacity(generations.len());
    for generation in generations {
        let prompt = by_id
            .get(generation.prompt_id.as_str())
            .ok_or_else(|| ExtractError::DanglingPromptId(generation.prompt_id.clone()))?;
        let outcome = match generation.finish_reason {
            FinishReason::Error => ExtractionOutcome::ParsingError {
                prompt_id: generation.prompt_id.clone(),
                reason: "generation failed".to_string(),
            },
            finish => {
                match extract_code(
                    &generation.raw_text,
                    prompt.feature.base_language,
                    &generation.prompt_id,
                ) {
                    ExtractionOutcome::ParsingError { prompt_id, reason }
                        if finish == FinishReason::Length =>
                    {
                        ExtractionOutcome::ParsingError {
                            prompt_id,
                            reason: format!("output truncated at token limit; {reason}"),
                        }
                    }
                    outcome => outcome,
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
