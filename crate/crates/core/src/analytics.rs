//! Aggregate evaluation ledgers into report tables and summarize manual
//! annotations.
//!
//! Percentages are displayed as integers rounded half-away-from-zero; the
//! full-precision ratios stay available on the report types for machine
//! consumers.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{EvalOutcome, EvalRecord};
use crate::lang::Language;
use crate::prompt::{PromptMethod, SuiteMetaRecord};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no metadata for prompt id {0}")]
    MissingMetadata(String),
    #[error("annotation record {index} violates invariants: {why}")]
    InvariantViolation { index: usize, why: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Integer percent, rounded half-away-from-zero, as the report tables show.
pub fn display_pct(numerator: usize, denominator: usize) -> i64 {
    if denominator == 0 {
        return 0;
    }
    (100.0 * numerator as f64 / denominator as f64).round() as i64
}

/// Outcome counts for one (LLM, method) testsuite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub llm: String,
    pub method: PromptMethod,
    pub counts: BTreeMap<EvalOutcome, usize>,
    pub total: usize,
    /// Full-precision passing percentage.
    pub pass_pct: f64,
}

impl SuiteReport {
    pub fn count(&self, outcome: EvalOutcome) -> usize {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn display_pass_pct(&self) -> i64 {
        display_pct(self.count(EvalOutcome::Pass), self.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangStats {
    pub pass: usize,
    pub total: usize,
    pub pct: f64,
}

impl LangStats {
    pub fn display_pct(&self) -> i64 {
        display_pct(self.pass, self.total)
    }
}

/// Pass counts per base language for one LLM.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LanguageBreakdown {
    pub per_language: BTreeMap<Language, LangStats>,
}

/// Metadata lookup built from suite meta records. Within one ledger a prompt
/// id identifies a single (llm, method, language) triple.
pub type MetaMap = std::collections::HashMap<String, SuiteMetaRecord>;

pub fn meta_map(records: &[SuiteMetaRecord]) -> MetaMap {
    records
        .iter()
        .map(|m| (m.prompt_id.clone(), m.clone()))
        .collect()
}

/// Group records by (llm, method) and count outcomes. Counts are exhaustive
/// over the four outcomes; reports come out sorted by (llm, method) so the
/// result does not depend on record order.
pub fn tabulate(
    records: &[EvalRecord],
    meta: &MetaMap,
) -> Result<Vec<SuiteReport>, AnalyticsError> {
    let mut groups: BTreeMap<(String, PromptMethod), BTreeMap<EvalOutcome, usize>> =
        BTreeMap::new();
    for record in records {
        let info = meta
            .get(&record.prompt_id)
            .ok_or_else(|| AnalyticsError::MissingMetadata(record.prompt_id.clone()))?;
        let counts = groups
            .entry((info.llm.clone(), info.method))
            .or_insert_with(empty_counts);
        *counts.entry(record.outcome).or_default() += 1;
    }
    Ok(groups
        .into_iter()
        .map(|((llm, method), counts)| {
            let total: usize = counts.values().sum();
            let pass = counts.get(&EvalOutcome::Pass).copied().unwrap_or(0);
            SuiteReport {
                llm,
                method,
                counts,
                total,
                pass_pct: if total == 0 {
                    0.0
                } else {
                    100.0 * pass as f64 / total as f64
                },
            }
        })
        .collect())
}

fn empty_counts() -> BTreeMap<EvalOutcome, usize> {
    EvalOutcome::ALL.iter().map(|&o| (o, 0)).collect()
}

/// Per-language pass percentages, grouped by LLM.
pub fn language_breakdown(
    records: &[EvalRecord],
    meta: &MetaMap,
) -> Result<BTreeMap<String, LanguageBreakdown>, AnalyticsError> {
    let mut groups: BTreeMap<String, BTreeMap<Language, (usize, usize)>> = BTreeMap::new();
    for record in records {
        let info = meta
            .get(&record.prompt_id)
            .ok_or_else(|| AnalyticsError::MissingMetadata(record.prompt_id.clone()))?;
        let slot = groups
            .entry(info.llm.clone())
            .or_default()
            .entry(info.language)
            .or_insert((0, 0));
        slot.1 += 1;
        if record.outcome == EvalOutcome::Pass {
            slot.0 += 1;
        }
    }
    Ok(groups
        .into_iter()
        .map(|(llm, langs)| {
            let per_language = langs
                .into_iter()
                .map(|(lang, (pass, total))| {
                    (
                        lang,
                        LangStats {
                            pass,
                            total,
                            pct: if total == 0 {
                                0.0
                            } else {
                                100.0 * pass as f64 / total as f64
                            },
                        },
                    )
                })
                .collect();
            (llm, LanguageBreakdown { per_language })
        })
        .collect())
}

/// The five correctness levels, from no knowledge (0) to expert (1).
pub const CORRECTNESS_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Manual annotation of one evaluated test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub prompt_id: String,
    pub is_passing_test: bool,
    /// Whether a passing test actually validates its target feature.
    /// Present iff `is_passing_test`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_pass: Option<bool>,
    /// One of [`CORRECTNESS_LEVELS`].
    pub correctness: f64,
    /// Failing tests only. The flags are not exclusive: a test can be wrong
    /// in the base language and in its directive usage at once.
    #[serde(default)]
    pub base_language_error: bool,
    #[serde(default)]
    pub openacc_error: bool,
}

impl AnnotationRecord {
    fn validate(&self) -> Result<(), String> {
        if self.true_pass.is_some() != self.is_passing_test {
            return Err("true_pass must be present exactly for passing tests".into());
        }
        if self.is_passing_test && (self.base_language_error || self.openacc_error) {
            return Err("error flags apply to failing tests only".into());
        }
        if !CORRECTNESS_LEVELS.contains(&self.correctness) {
            return Err(format!(
                "correctness {} is not one of the five levels",
                self.correctness
            ));
        }
        Ok(())
    }
}

/// Aggregate annotation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    /// Percentage of passing tests that truly validate their feature.
    pub true_pass_pct: f64,
    pub pass_correctness_mean: f64,
    pub fail_correctness_mean: f64,
    /// Percentage of failing tests with a base-language error.
    pub base_lang_error_pct: f64,
    /// Percentage of failing tests with a directive-usage error.
    pub openacc_error_pct: f64,
    pub n_pass: usize,
    pub n_fail: usize,
}

/// Summarize validated annotation records.
pub fn summarize_annotations(
    annotations: &[AnnotationRecord],
) -> Result<AnalysisSummary, AnalyticsError> {
    for (index, record) in annotations.iter().enumerate() {
        record
            .validate()
            .map_err(|why| AnalyticsError::InvariantViolation { index, why })?;
    }
    let passing: Vec<&AnnotationRecord> =
        annotations.iter().filter(|a| a.is_passing_test).collect();
    let failing: Vec<&AnnotationRecord> =
        annotations.iter().filter(|a| !a.is_passing_test).collect();

    let pct = |count: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * count as f64 / total as f64
        }
    };
    let mean = |records: &[&AnnotationRecord]| {
        if records.is_empty() {
            0.0
        } else {
            records.iter().map(|a| a.correctness).sum::<f64>() / records.len() as f64
        }
    };

    Ok(AnalysisSummary {
        true_pass_pct: pct(
            passing.iter().filter(|a| a.true_pass == Some(true)).count(),
            passing.len(),
        ),
        pass_correctness_mean: mean(&passing),
        fail_correctness_mean: mean(&failing),
        base_lang_error_pct: pct(
            failing.iter().filter(|a| a.base_language_error).count(),
            failing.len(),
        ),
        openacc_error_pct: pct(
            failing.iter().filter(|a| a.openacc_error).count(),
            failing.len(),
        ),
        n_pass: passing.len(),
        n_fail: failing.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

/// Render the report deterministically. Markdown and CSV carry the same
/// numbers; only the framing differs.
pub fn render_report(
    reports: &[SuiteReport],
    breakdowns: &BTreeMap<String, LanguageBreakdown>,
    summary: Option<&AnalysisSummary>,
    format: ReportFormat,
) -> Vec<u8> {
    match format {
        ReportFormat::Markdown => render_markdown(reports, breakdowns, summary).into_bytes(),
        ReportFormat::Csv => render_csv(reports, breakdowns, summary).into_bytes(),
    }
}

fn render_markdown(
    reports: &[SuiteReport],
    breakdowns: &BTreeMap<String, LanguageBreakdown>,
    summary: Option<&AnalysisSummary>,
) -> String {
    let mut out = String::from("# Testsuite report\n");

    out.push_str("\n## Outcome counts\n\n");
    out.push_str(
        "| LLM | Method | Parsing Error | Compile Fail | Runtime Fail | Pass | Total | Pass % |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in reports {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.llm,
            r.method.display_name(),
            r.count(EvalOutcome::ParsingError),
            r.count(EvalOutcome::CompileError),
            r.count(EvalOutcome::RuntimeFail),
            r.count(EvalOutcome::Pass),
            r.total,
            r.display_pass_pct(),
        ));
    }

    out.push_str("\n## Passing percentage by method\n\n");
    out.push_str("| LLM |");
    for method in PromptMethod::ALL {
        out.push_str(&format!(" {} |", method.display_name()));
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(PromptMethod::ALL.len()));
    out.push('\n');
    for (llm, row) in method_pivot(reports) {
        out.push_str(&format!("| {llm} |"));
        for method in PromptMethod::ALL {
            match row.get(&method) {
                Some(pct) => out.push_str(&format!(" {pct} |")),
                None => out.push_str("  |"),
            }
        }
        out.push('\n');
    }

    out.push_str("\n## Pass percentage per base language\n\n");
    out.push_str("| LLM | C | C++ | Fortran |\n|---|---|---|---|\n");
    for (llm, breakdown) in breakdowns {
        out.push_str(&format!("| {llm} |"));
        for lang in Language::ALL {
            match breakdown.per_language.get(&lang) {
                Some(stats) => out.push_str(&format!(" {} |", stats.display_pct())),
                None => out.push_str("  |"),
            }
        }
        out.push('\n');
    }

    if let Some(s) = summary {
        out.push_str("\n## Manual analysis\n\n");
        out.push_str(
            "| True Pass | Pass Correctness | Fail Correctness | Base Lang Error | OpenACC Error |\n",
        );
        out.push_str("|---|---|---|---|---|\n");
        out.push_str(&format!(
            "| {} | {:.2} | {:.2} | {} | {} |\n",
            s.true_pass_pct.round() as i64,
            s.pass_correctness_mean,
            s.fail_correctness_mean,
            s.base_lang_error_pct.round() as i64,
            s.openacc_error_pct.round() as i64,
        ));
        out.push_str(&format!(
            "\nAnnotated: {} passing, {} failing.\n",
            s.n_pass, s.n_fail
        ));
    }
    out
}

fn render_csv(
    reports: &[SuiteReport],
    breakdowns: &BTreeMap<String, LanguageBreakdown>,
    summary: Option<&AnalysisSummary>,
) -> String {
    let mut out = String::from(
        "table,llm,method,parsing_error,compile_error,runtime_fail,pass,total,pass_pct\n",
    );
    for r in reports {
        out.push_str(&format!(
            "counts,{},{},{},{},{},{},{},{}\n",
            r.llm,
            r.method.key(),
            r.count(EvalOutcome::ParsingError),
            r.count(EvalOutcome::CompileError),
            r.count(EvalOutcome::RuntimeFail),
            r.count(EvalOutcome::Pass),
            r.total,
            r.display_pass_pct(),
        ));
    }
    for (llm, row) in method_pivot(reports) {
        for method in PromptMethod::ALL {
            if let Some(pct) = row.get(&method) {
                out.push_str(&format!("methods,{llm},{},,,,,,{pct}\n", method.key()));
            }
        }
    }
    for (llm, breakdown) in breakdowns {
        for lang in Language::ALL {
            if let Some(stats) = breakdown.per_language.get(&lang) {
                out.push_str(&format!(
                    "languages,{llm},{lang},,,,{},{},{}\n",
                    stats.pass,
                    stats.total,
                    stats.display_pct()
                ));
            }
        }
    }
    if let Some(s) = summary {
        out.push_str(&format!(
            "analysis,,,{},{:.2},{:.2},{},{},\n",
            s.true_pass_pct.round() as i64,
            s.pass_correctness_mean,
            s.fail_correctness_mean,
            s.base_lang_error_pct.round() as i64,
            s.openacc_error_pct.round() as i64,
        ));
    }
    out
}

fn method_pivot(reports: &[SuiteReport]) -> BTreeMap<String, BTreeMap<PromptMethod, i64>> {
    let mut pivot: BTreeMap<String, BTreeMap<PromptMethod, i64>> = BTreeMap::new();
    for r in reports {
        pivot
            .entry(r.llm.clone())
            .or_default()
            .insert(r.method, r.display_pass_pct());
    }
    pivot
}

/// Interactively annotate evaluated tests: one block of questions per
/// record, answers read line by line. Used by the `annotate` subcommand.
pub fn annotate_interactive<R: BufRead, W: Write>(
    records: &[EvalRecord],
    input: &mut R,
    output: &mut W,
) -> std::io::Result<Vec<AnnotationRecord>> {
    let mut annotations = Vec::new();
    for record in records {
        let passing = record.outcome == EvalOutcome::Pass;
        writeln!(
            output,
            "\n=== {} (outcome: {}) ===",
            record.prompt_id,
            record.outcome.display_name()
        )?;
        let correctness = loop {
            write!(output, "correctness [0, 0.25, 0.5, 0.75, 1]: ")?;
            output.flush()?;
            let line = read_line(input)?;
            if let Ok(v) = line.trim().parse::<f64>() {
                if CORRECTNESS_LEVELS.contains(&v) {
                    break v;
                }
            }
            writeln!(output, "please answer one of 0, 0.25, 0.5, 0.75, 1")?;
        };
        let annotation = if passing {
            let true_pass = ask_yes_no(
                input,
                output,
                "true pass (validates the target feature)? [y/n]: ",
            )?;
            AnnotationRecord {
                prompt_id: record.prompt_id.clone(),
                is_passing_test: true,
                true_pass: Some(true_pass),
                correctness,
                base_language_error: false,
                openacc_error: false,
            }
        } else {
            let base = ask_yes_no(input, output, "base language error? [y/n]: ")?;
            let acc = ask_yes_no(input, output, "OpenACC usage error? [y/n]: ")?;
            AnnotationRecord {
                prompt_id: record.prompt_id.clone(),
                is_passing_test: false,
                true_pass: None,
                correctness,
                base_language_error: base,
                openacc_error: acc,
            }
        };
        annotations.push(annotation);
    }
    Ok(annotations)
}

fn ask_yes_no<R: BufRead, W: Write>(
    input: &mut R,
    output: &mut W,
    question: &str,
) -> std::io::Result<bool> {
    loop {
        write!(output, "{question}")?;
        output.flush()?;
        match read_line(input)?.trim().to_ascii_lowercase().as_str() {
            "y" | "yes" => return Ok(true),
            "n" | "no" => return Ok(false),
            _ => writeln!(output, "please answer y or n")?,
        }
    }
}

fn read_line<R: BufRead>(input: &mut R) -> std::io::Result<String> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            "input ended mid-annotation",
        ));
    }
    Ok(line)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, outcome: EvalOutcome) -> EvalRecord {
        EvalRecord {
            prompt_id: id.to_string(),
            outcome,
            exit_code: if outcome == EvalOutcome::Pass {
                Some(0)
            } else {
                None
            },
            compile_stderr: String::new(),
            run_stdout: String::new(),
            run_stderr: String::new(),
            compile_ms: 0,
            run_ms: 0,
            timed_out: false,
        }
    }

    fn meta_for(ids: &[&str], llm: &str, method: PromptMethod, lang: Language) -> MetaMap {
        meta_map(
            &ids.iter()
                .map(|id| SuiteMetaRecord {
                    prompt_id: id.to_string(),
                    llm: llm.to_string(),
                    method,
                    language: lang,
                })
                .collect::<Vec<_>>(),
        )
    }

    /// Synthesize `counts` records (parse, compile, runtime, pass) for one suite.
    fn suite_records(prefix: &str, counts: [usize; 4]) -> (Vec<EvalRecord>, Vec<String>) {
        let mut records = Vec::new();
        let mut ids = Vec::new();
        let outcomes = [
            EvalOutcome::ParsingError,
            EvalOutcome::CompileError,
            EvalOutcome::RuntimeFail,
            EvalOutcome::Pass,
        ];
        for (outcome, &n) in outcomes.iter().zip(&counts) {
            for i in 0..n {
                let id = format!("{prefix}-{}-{i}", outcome.key());
                records.push(record(&id, *outcome));
                ids.push(id);
            }
        }
        (records, ids)
    }

    #[test]
    fn tabulate_counts_and_rounds_display_percentages() {
        let (records, ids) = suite_records("ds", [17, 105, 59, 170]);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let meta = meta_for(
            &refs,
            "deepseek",
            PromptMethod::ExpressiveTemplateRag,
            Language::C,
        );
        let reports = tabulate(&records, &meta).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.total, 351);
        assert_eq!(r.count(EvalOutcome::Pass), 170);
        assert_eq!(r.display_pass_pct(), 48);
        assert!((r.pass_pct - 100.0 * 170.0 / 351.0).abs() < 1e-12);
    }

    #[test]
    fn tabulate_is_permutation_invariant() {
        let (mut records, ids) = suite_records("x", [1, 2, 3, 4]);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let meta = meta_for(&refs, "m", PromptMethod::Template, Language::C);
        let a = tabulate(&records, &meta).unwrap();
        records.reverse();
        let b = tabulate(&records, &meta).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tabulate_requires_metadata() {
        let records = vec![record("ghost", EvalOutcome::Pass)];
        let err = tabulate(&records, &MetaMap::new()).unwrap_err();
        assert!(matches!(err, AnalyticsError::MissingMetadata(_)));
    }

    #[test]
    fn all_pass_suite_displays_100() {
        let (records, ids) = suite_records("p", [0, 0, 0, 10]);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let meta = meta_for(&refs, "m", PromptMethod::Template, Language::C);
        let reports = tabulate(&records, &meta).unwrap();
        assert_eq!(reports[0].display_pass_pct(), 100);
    }

    #[test]
    fn language_breakdown_groups_by_llm_and_language() {
        let mut records = Vec::new();
        let mut meta_records = Vec::new();
        for (lang, pass, total) in [
            (Language::C, 60usize, 117usize),
            (Language::Cpp, 55, 117),
            (Language::Fortran, 55, 117),
        ] {
            for i in 0..total {
                let id = format!("{lang}-{i}");
                let outcome = if i < pass {
                    EvalOutcome::Pass
                } else {
                    EvalOutcome::RuntimeFail
                };
                records.push(record(&id, outcome));
                meta_records.push(SuiteMetaRecord {
                    prompt_id: id,
                    llm: "deepseek".into(),
                    method: PromptMethod::ExpressiveTemplateRag,
                    language: lang,
                });
            }
        }
        let breakdowns = language_breakdown(&records, &meta_map(&meta_records)).unwrap();
        let b = &breakdowns["deepseek"];
        assert_eq!(b.per_language[&Language::C].display_pct(), 51);
        assert_eq!(b.per_language[&Language::Cpp].display_pct(), 47);
        assert_eq!(b.per_language[&Language::Fortran].display_pct(), 47);
    }

    #[test]
    fn single_language_breakdown_has_no_other_rows() {
        let records = vec![record("a", EvalOutcome::Pass)];
        let meta = meta_for(&["a"], "m", PromptMethod::Template, Language::C);
        let breakdowns = language_breakdown(&records, &meta).unwrap();
        let b = &breakdowns["m"];
        assert_eq!(b.per_language[&Language::C].display_pct(), 100);
        assert!(!b.per_language.contains_key(&Language::Fortran));
    }

    fn annotation(passing: bool, true_pass: Option<bool>, correctness: f64) -> AnnotationRecord {
        AnnotationRecord {
            prompt_id: "x".into(),
            is_passing_test: passing,
            true_pass,
            correctness,
            base_language_error: false,
            openacc_error: false,
        }
    }

    #[test]
    fn summarize_splits_means_by_pass_fail() {
        let mut records = Vec::new();
        for _ in 0..3 {
            records.push(annotation(true, Some(true), 1.0));
        }
        records.push(annotation(true, Some(false), 0.5));
        let mut failing = annotation(false, None, 0.25);
        failing.base_language_error = true;
        failing.openacc_error = true;
        records.push(failing);
        let s = summarize_annotations(&records).unwrap();
        assert_eq!(s.n_pass, 4);
        assert_eq!(s.n_fail, 1);
        assert_eq!(s.true_pass_pct, 75.0);
        assert!((s.pass_correctness_mean - 0.875).abs() < 1e-12);
        assert_eq!(s.fail_correctness_mean, 0.25);
        assert_eq!(s.base_lang_error_pct, 100.0);
        assert_eq!(s.openacc_error_pct, 100.0);
    }

    #[test]
    fn invariant_violations_are_rejected() {
        // true_pass on a failing test
        let bad = annotation(false, Some(true), 0.5);
        assert!(summarize_annotations(&[bad]).is_err());
        // error flag on a passing test
        let mut bad = annotation(true, Some(true), 0.5);
        bad.openacc_error = true;
        assert!(summarize_annotations(&[bad]).is_err());
        // off-scale correctness
        let bad = annotation(true, Some(true), 0.3);
        assert!(summarize_annotations(&[bad]).is_err());
    }

    #[test]
    fn renders_are_deterministic_and_carry_the_same_numbers() {
        let (records, ids) = suite_records("ds", [3, 158, 71, 119]);
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let meta = meta_for(
            &refs,
            "phind",
            PromptMethod::ExpressiveTemplateRag,
            Language::C,
        );
        let reports = tabulate(&records, &meta).unwrap();
        let breakdowns = language_breakdown(&records, &meta).unwrap();
        let md1 = render_report(&reports, &breakdowns, None, ReportFormat::Markdown);
        let md2 = render_report(&reports, &breakdowns, None, ReportFormat::Markdown);
        assert_eq!(md1, md2);
        let md = String::from_utf8(md1).unwrap();
        let csv = String::from_utf8(render_report(
            &reports,
            &breakdowns,
            None,
            ReportFormat::Csv,
        ))
        .unwrap();
        assert!(
            md.contains("| Parsing Error | Compile Fail | Runtime Fail | Pass |")
                || md.contains("Parsing Error | Compile Fail | Runtime Fail | Pass | Total")
        );
        assert!(md.contains("| 34 |"));
        assert!(csv.contains(",34"));
        assert!(csv.contains("3,158,71,119"));
    }

    #[test]
    fn empty_report_is_headers_only() {
        let md = String::from_utf8(render_report(
            &[],
            &BTreeMap::new(),
            None,
            ReportFormat::Markdown,
        ))
        .unwrap();
        assert!(md.contains("## Outcome counts"));
        assert!(!md.contains("| 0 |"));
    }

    #[test]
    fn interactive_annotation_parses_answers() {
        let records = vec![
            record("pass-1", EvalOutcome::Pass),
            record("fail-1", EvalOutcome::CompileError),
        ];
        let input = "1\ny\n0.25\nn\ny\n";
        let mut reader = std::io::Cursor::new(input);
        let mut sink = Vec::new();
        let annotations = annotate_interactive(&records, &mut reader, &mut sink).unwrap();
        assert_eq!(annotations.len(), 2);
        assert_eq!(annotations[0].true_pass, Some(true));
        assert_eq!(annotations[0].correctness, 1.0);
        assert!(!annotations[1].base_language_error);
        assert!(annotations[1].openacc_error);
        summarize_annotations(&annotations).unwrap();
    }
}
