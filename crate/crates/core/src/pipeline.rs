//! End-to-end orchestration: ingest → build-db → gen-prompts → generate →
//! extract → evaluate → report, driven by a [`RunConfig`].
//!
//! Every stage persists its artifacts under the run's output directory and
//! records an input digest in the manifest, so interrupted runs resume by
//! skipping steps whose inputs have not changed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, LanguageBreakdown, ReportFormat, SuiteReport};
use crate::corpus;
use crate::extract::{extract_suite, ExtractionOutcome};
use crate::gateway::{
    batch_generate, record_fixtures, FixtureStore, GenerationRecord, HttpBackend, ReplayBackend,
    RetryPolicy,
};
use crate::harness::{evaluate_suite, write_summary_csv, EvalEntry, RunPolicy};
use crate::plan::{PlanError, RunConfig, StagePlan};
use crate::prompt::{
    build_prompt_suites, AssetLibrary, PromptMethod, PromptRecord, ResolvedStage, SuiteMetaRecord,
};
use crate::retrieval::RetrievalDb;
use crate::util::{read_jsonl, sha256_hex, write_jsonl};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),
    #[error(transparent)]
    Prompt(#[from] crate::prompt::PromptError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Extract(#[from] crate::extract::ExtractError),
    #[error(transparent)]
    Analytics(#[from] analytics::AnalyticsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("pipeline error: {0}")]
    Other(String),
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    /// Skip steps whose recorded input digests still match.
    pub resume: bool,
    /// Answer prompts from this fixture store instead of any endpoint.
    pub replay: Option<PathBuf>,
    /// After generation, write all responses into this fixture store.
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub input_digest: String,
    pub outputs: Vec<PathBuf>,
}

/// Persistent run manifest: totals, artifact locations, and per-step digests
/// for resume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub plan_name: String,
    pub suites: usize,
    pub prompts: usize,
    pub artifacts: BTreeMap<String, PathBuf>,
    pub started: String,
    pub finished: Option<String>,
    #[serde(default)]
    pub steps: BTreeMap<String, StepRecord>,
}

impl RunManifest {
    fn new(plan_name: &str) -> Self {
        Self {
            plan_name: plan_name.to_string(),
            suites: 0,
            prompts: 0,
            artifacts: BTreeMap::new(),
            started: chrono::Utc::now().to_rfc3339(),
            finished: None,
            steps: BTreeMap::new(),
        }
    }

    fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let bytes =
            serde_json::to_vec_pretty(self).map_err(|e| PipelineError::Other(e.to_string()))?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    fn load(path: &Path) -> Option<Self> {
        let bytes = std::fs::read(path).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// A step may be skipped when its input digest matches and every
    /// recorded output still exists.
    fn can_skip(&self, key: &str, input_digest: &str) -> bool {
        self.steps.get(key).is_some_and(|step| {
            step.input_digest == input_digest && step.outputs.iter().all(|p| p.exists())
        })
    }

    fn record_step(&mut self, key: &str, input_digest: String, outputs: Vec<PathBuf>) {
        self.steps.insert(
            key.to_string(),
            StepRecord {
                input_digest,
                outputs,
            },
        );
    }
}

/// Index entry describing one rendered suite on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteIndexEntry {
    pub suite_id: String,
    pub stage: String,
    pub llm: String,
    pub method: PromptMethod,
    pub prompt_count: usize,
    pub prompts_file: PathBuf,
    pub meta_file: PathBuf,
}

fn file_digest(path: &Path) -> Result<String, PipelineError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Run the whole pipeline. Stage errors abort the run; the manifest written
/// so far is preserved on disk.
pub fn run_pipeline(
    config: &RunConfig,
    options: &PipelineOptions,
) -> Result<RunManifest, PipelineError> {
    let out_dir = config.resolve(&config.run.out_dir);
    std::fs::create_dir_all(&out_dir)?;
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = if options.resume {
        RunManifest::load(&manifest_path).unwrap_or_else(|| RunManifest::new(&config.run.name))
    } else {
        RunManifest::new(&config.run.name)
    };
    manifest.finished = None;

    // ingest
    let spec_text = config.load_spec_text()?;
    let pattern = config.heading_pattern()?;
    let index = corpus::ingest(&spec_text, &pattern)?;
    let spec_index_path = out_dir.join("spec_index.json");
    let ingest_digest = sha256_hex(
        format!(
            "{}|{}",
            index.source_digest,
            config.run.heading_pattern.as_deref().unwrap_or("default")
        )
        .as_bytes(),
    );
    if !(options.resume && manifest.can_skip("ingest", &ingest_digest)) {
        std::fs::write(&spec_index_path, corpus::export_spec_json(&index))?;
        manifest.record_step("ingest", ingest_digest, vec![spec_index_path.clone()]);
        manifest.save(&manifest_path)?;
    } else {
        log::info!("resume: skipping ingest");
    }
    manifest
        .artifacts
        .insert("spec_index".into(), spec_index_path);

    // build-db
    let provider = config.retrieval.provider()?;
    let db_dir = out_dir.join("db");
    let db_digest = sha256_hex(
        format!(
            "{}|{}|{}|{}",
            index.source_digest,
            config.retrieval.chunk_size,
            config.retrieval.overlap,
            provider.tag()
        )
        .as_bytes(),
    );
    let db: RetrievalDb<Scalar> = if options.resume && manifest.can_skip("build-db", &db_digest) {
        log::info!("resume: loading retrieval db");
        RetrievalDb::load(&db_dir)?
    } else {
        let db = RetrievalDb::build(
            &spec_text,
            config.retrieval.chunk_size,
            config.retrieval.overlap,
            &provider,
        )?;
        db.save(&db_dir)?;
        manifest.record_step(
            "build-db",
            db_digest,
            vec![db_dir.join("chunks.jsonl"), db_dir.join("store.jsonl")],
        );
        manifest.save(&manifest_path)?;
        db
    };
    manifest.artifacts.insert("db".into(), db_dir);

    // gen-prompts
    let assets = AssetLibrary::load(&config.resolve(&config.run.assets_dir))?;
    let prompts_dir = out_dir.join("prompts");
    std::fs::create_dir_all(&prompts_dir)?;
    let suites_index_path = prompts_dir.join("suites.json");
    let stages_repr =
        serde_json::to_string(&config.stages).map_err(|e| PipelineError::Other(e.to_string()))?;
    let prompts_digest = sha256_hex(
        format!(
            "{}|{}|{}",
            index.source_digest, stages_repr, config.retrieval.k
        )
        .as_bytes(),
    );
    if !(options.resume && manifest.can_skip("gen-prompts", &prompts_digest)) {
        let mut entries: Vec<SuiteIndexEntry> = Vec::new();
        for stage in &config.stages {
            let features = config.stage_features(stage, &index)?;
            let resolved = ResolvedStage {
                name: stage.name.clone(),
                llms: stage.llms.clone(),
                methods: stage.methods.clone(),
                features,
                rag_mode: stage.rag_mode,
                k: config.retrieval.k,
            };
            let suites = build_prompt_suites(&resolved, &index, &db, &provider, &assets)?;
            for suite in suites {
                let suite_id = suite.suite_id();
                let prompts_file = prompts_dir.join(format!("{suite_id}.prompts.jsonl"));
                let meta_file = prompts_dir.join(format!("{suite_id}.meta.jsonl"));
                write_jsonl(&prompts_file, &suite.records)?;
                write_jsonl(&meta_file, &suite.meta_records())?;
                entries.push(SuiteIndexEntry {
                    suite_id,
                    stage: suite.stage.clone(),
                    llm: suite.llm.clone(),
                    method: suite.method,
                    prompt_count: suite.records.len(),
                    prompts_file,
                    meta_file,
                });
            }
        }
        let bytes =
            serde_json::to_vec_pretty(&entries).map_err(|e| PipelineError::Other(e.to_string()))?;
        std::fs::write(&suites_index_path, bytes)?;
        let outputs = entries
            .iter()
            .flat_map(|e| [e.prompts_file.clone(), e.meta_file.clone()])
            .chain([suites_index_path.clone()])
            .collect();
        manifest.record_step("gen-prompts", prompts_digest, outputs);
        manifest.save(&manifest_path)?;
    } else {
        log::info!("resume: skipping gen-prompts");
    }
    let suite_index: Vec<SuiteIndexEntry> =
        serde_json::from_slice(&std::fs::read(&suites_index_path)?)
            .map_err(|e| PipelineError::Other(format!("corrupt suites.json: {e}")))?;
    manifest.artifacts.insert("prompts".into(), prompts_dir);
    manifest.suites = suite_index.len();
    manifest.prompts = suite_index.iter().map(|e| e.prompt_count).sum();

    // generate
    let retry = RetryPolicy {
        max_attempts: config.gateway.max_attempts,
        backoff_base_ms: config.gateway.backoff_base_ms,
    };
    let replay_store = match &options.replay {
        Some(path) => Some(FixtureStore::load(path)?),
        None => None,
    };
    let generations_dir = out_dir.join("generations");
    std::fs::create_dir_all(&generations_dir)?;
    for entry in &suite_index {
        let generations_path = generations_dir.join(format!("{}.jsonl", entry.suite_id));
        let backend_tag = match &options.replay {
            Some(path) => format!("replay:{}", path.display()),
            None => format!("endpoint:{}", entry.llm),
        };
        let step_key = format!("generate:{}", entry.suite_id);
        let digest =
            sha256_hex(format!("{}|{backend_tag}", file_digest(&entry.prompts_file)?).as_bytes());
        if options.resume && manifest.can_skip(&step_key, &digest) {
            log::info!("resume: skipping {step_key}");
            continue;
        }
        let prompts: Vec<PromptRecord> = read_jsonl(&entry.prompts_file)?;
        let model_name = config
            .endpoints
            .get(&entry.llm)
            .map(|e| e.model_name.clone())
            .unwrap_or_else(|| entry.llm.clone());
        let records = match &replay_store {
            Some(store) => {
                let backend = ReplayBackend::new(store.clone(), model_name);
                batch_generate(&prompts, &backend, &retry, config.gateway.parallelism)
            }
            None => {
                let endpoint = config.endpoints.get(&entry.llm).cloned().ok_or_else(|| {
                    PipelineError::Other(format!(
                        "suite {} references unknown endpoint '{}'",
                        entry.suite_id, entry.llm
                    ))
                })?;
                let backend = HttpBackend::new(endpoint)?;
                batch_generate(&prompts, &backend, &retry, config.gateway.parallelism)
            }
        };
        write_jsonl(&generations_path, &records)?;
        manifest.record_step(&step_key, digest, vec![generations_path]);
        manifest.save(&manifest_path)?;
    }
    manifest
        .artifacts
        .insert("generations".into(), generations_dir.clone());

    // record fixtures from the generation ledgers
    if let Some(record_path) = &options.record {
        let mut store = FixtureStore::default();
        for entry in &suite_index {
            let prompts: Vec<PromptRecord> = read_jsonl(&entry.prompts_file)?;
            let records: Vec<GenerationRecord> =
                read_jsonl(&generations_dir.join(format!("{}.jsonl", entry.suite_id)))?;
            let suite_store = record_fixtures(&records, &prompts)?;
            for prompt in &prompts {
                if let Some(text) = suite_store.get(&prompt.text) {
                    store.insert(&prompt.text, text.to_string());
                }
            }
        }
        store.save(record_path)?;
        manifest
            .artifacts
            .insert("fixtures".into(), record_path.clone());
    }

    // extract
    let extracted_dir = out_dir.join("extracted");
    for entry in &suite_index {
        let generations_path = generations_dir.join(format!("{}.jsonl", entry.suite_id));
        let suite_dir = extracted_dir.join(&entry.suite_id);
        let outcomes_path = suite_dir.join("outcomes.jsonl");
        let step_key = format!("extract:{}", entry.suite_id);
        let digest = file_digest(&generations_path)?;
        if options.resume && manifest.can_skip(&step_key, &digest) {
            log::info!("resume: skipping {step_key}");
            continue;
        }
        let prompts: Vec<PromptRecord> = read_jsonl(&entry.prompts_file)?;
        let generations: Vec<GenerationRecord> = read_jsonl(&generations_path)?;
        let outcomes = extract_suite(&generations, &prompts)?;
        std::fs::create_dir_all(&suite_dir)?;
        let mut outputs = vec![outcomes_path.clone()];
        for outcome in &outcomes {
            if let Some(test) = outcome.as_test() {
                let path =
                    suite_dir.join(format!("{}.{}", test.prompt_id, test.language.extension()));
                std::fs::write(&path, &test.code)?;
                outputs.push(path);
            }
        }
        write_jsonl(&outcomes_path, &outcomes)?;
        manifest.record_step(&step_key, digest, outputs);
        manifest.save(&manifest_path)?;
    }
    manifest
        .artifacts
        .insert("extracted".into(), extracted_dir.clone());

    // evaluate
    let stages_by_name: BTreeMap<&str, &StagePlan> =
        config.stages.iter().map(|s| (s.name.as_str(), s)).collect();
    let results_dir = out_dir.join("results");
    std::fs::create_dir_all(&results_dir)?;
    let policy = RunPolicy {
        timeout_s: config.harness.timeout_s,
        ..RunPolicy::default()
    };
    for entry in &suite_index {
        let outcomes_path = extracted_dir.join(&entry.suite_id).join("outcomes.jsonl");
        let results_path = results_dir.join(format!("{}.jsonl", entry.suite_id));
        let summary_path = results_dir.join(format!("{}.summary.csv", entry.suite_id));
        let stage = stages_by_name.get(entry.stage.as_str()).ok_or_else(|| {
            PipelineError::Other(format!(
                "suite {} references unknown stage '{}'",
                entry.suite_id, entry.stage
            ))
        })?;
        let profiles = config.stage_profiles(stage)?;
        let profiles_repr =
            serde_json::to_string(&profiles).map_err(|e| PipelineError::Other(e.to_string()))?;
        let step_key = format!("evaluate:{}", entry.suite_id);
        let digest = sha256_hex(
            format!(
                "{}|{}|{}",
                file_digest(&outcomes_path)?,
                profiles_repr,
                policy.timeout_s
            )
            .as_bytes(),
        );
        if options.resume && manifest.can_skip(&step_key, &digest) {
            log::info!("resume: skipping {step_key}");
            continue;
        }
        let outcomes: Vec<ExtractionOutcome> = read_jsonl(&outcomes_path)?;
        let entries = evaluate_suite(&outcomes, &profiles, &policy, config.harness.workers);
        write_jsonl(&results_path, &entries)?;
        write_summary_csv(&entries, &summary_path)?;
        manifest.record_step(&step_key, digest, vec![results_path, summary_path]);
        manifest.save(&manifest_path)?;
    }
    manifest
        .artifacts
        .insert("results".into(), results_dir.clone());

    // report
    let reports_dir = out_dir.join("reports");
    std::fs::create_dir_all(&reports_dir)?;
    let mut reports: Vec<SuiteReport> = Vec::new();
    let mut breakdowns: BTreeMap<String, LanguageBreakdown> = BTreeMap::new();
    for entry in &suite_index {
        let results_path = results_dir.join(format!("{}.jsonl", entry.suite_id));
        let entries: Vec<EvalEntry> = read_jsonl(&results_path)?;
        let records: Vec<_> = entries
            .iter()
            .filter_map(|e| e.as_record())
            .cloned()
            .collect();
        let meta_records: Vec<SuiteMetaRecord> = read_jsonl(&entry.meta_file)?;
        let meta = analytics::meta_map(&meta_records);
        reports.extend(analytics::tabulate(&records, &meta)?);
        for (llm, breakdown) in analytics::language_breakdown(&records, &meta)? {
            let merged = breakdowns.entry(llm).or_default();
            for (lang, stats) in breakdown.per_language {
                let slot = merged
                    .per_language
                    .entry(lang)
                    .or_insert(crate::analytics::LangStats {
                        pass: 0,
                        total: 0,
                        pct: 0.0,
                    });
                slot.pass += stats.pass;
                slot.total += stats.total;
                slot.pct = if slot.total == 0 {
                    0.0
                } else {
                    100.0 * slot.pass as f64 / slot.total as f64
                };
            }
        }
    }
    reports.sort_by(|a, b| (&a.llm, a.method).cmp(&(&b.llm, b.method)));
    let report_md = reports_dir.join("report.md");
    let report_csv = reports_dir.join("report.csv");
    std::fs::write(
        &report_md,
        analytics::render_report(&reports, &breakdowns, None, ReportFormat::Markdown),
    )?;
    std::fs::write(
        &report_csv,
        analytics::render_report(&reports, &breakdowns, None, ReportFormat::Csv),
    )?;
    manifest.artifacts.insert("report_md".into(), report_md);
    manifest.artifacts.insert("report_csv".into(), report_csv);

    manifest.finished = Some(chrono::Utc::now().to_rfc3339());
    manifest.save(&manifest_path)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{BackendError, BackendResponse, CompletionBackend, FinishReason};

    /// Deterministic stand-in endpoint: answers every prompt with a small C
    /// program derived from the prompt text.
    struct Scripted;

    impl CompletionBackend for Scripted {
        fn model_name(&self) -> &str {
            "scripted"
        }
        fn send(&self, prompt_text: &str) -> Result<BackendResponse, BackendError> {
            let exit = if prompt_text.contains("beta") { 1 } else { 0 };
            Ok(BackendResponse {
                text: format!("```c\nint main(void) {{ return {exit}; }}\n```\n"),
                finish_reason: FinishReason::Stop,
                latency_ms: 0,
            })
        }
    }

    fn write_tree(dir: &Path) {
        std::fs::create_dir_all(dir.join("assets/templates")).unwrap();
        std::fs::write(dir.join("assets/templates/c"), "int main(){return 0;}\n").unwrap();
        std::fs::create_dir_all(dir.join("assets/headers")).unwrap();
        std::fs::write(
            dir.join("assets/headers/acc_testsuite.h"),
            "#define NUM_TEST_CALLS 10\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("spec.txt"),
            "2.1 Alpha Feature\nalpha alpha body\n2.2 Beta Feature\nbeta beta body\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("run.toml"),
            r#"
[run]
name = "demo"
spec_text = "spec.txt"
assets_dir = "assets"
out_dir = "out"

[gateway]
backoff_base_ms = 0

[endpoints.scripted]
base_url = "http://localhost:9/v1/chat/completions"
model_name = "scripted"
auth_env_var = "SCRIPTED_KEY"

[profiles.host-c]
language = "c"
compile_command = "cc {src} -o {out}"
[profiles.host-c.support_header_files]
"acc_testsuite.h" = "assets/headers/acc_testsuite.h"

[[stages]]
name = "s1"
llms = ["scripted"]
methods = ["expressive-template-rag"]
languages = ["c"]
chapters = [2]
compiler_profile = "host-c"
"#,
        )
        .unwrap();
    }

    /// Record fixtures for every prompt of the config using the scripted
    /// backend, so the pipeline can run in replay mode.
    fn record_fixture_store(config: &RunConfig, path: &Path) {
        let text = config.load_spec_text().unwrap();
        let index = corpus::ingest(&text, &config.heading_pattern().unwrap()).unwrap();
        let provider = config.retrieval.provider().unwrap();
        let db = RetrievalDb::<Scalar>::build(
            &text,
            config.retrieval.chunk_size,
            config.retrieval.overlap,
            &provider,
        )
        .unwrap();
        let assets = AssetLibrary::load(&config.resolve(&config.run.assets_dir)).unwrap();
        let mut store = FixtureStore::default();
        for stage in &config.stages {
            let features = config.stage_features(stage, &index).unwrap();
            let resolved = ResolvedStage {
                name: stage.name.clone(),
                llms: stage.llms.clone(),
                methods: stage.methods.clone(),
                features,
                rag_mode: stage.rag_mode,
                k: config.retrieval.k,
            };
            let suites = build_prompt_suites(&resolved, &index, &db, &provider, &assets).unwrap();
            for suite in suites {
                let records = batch_generate(&suite.records, &Scripted, &RetryPolicy::default(), 1);
                let suite_store = record_fixtures(&records, &suite.records).unwrap();
                for prompt in &suite.records {
                    if let Some(reply) = suite_store.get(&prompt.text) {
                        store.insert(&prompt.text, reply.to_string());
                    }
                }
            }
        }
        store.save(path).unwrap();
    }

    #[test]
    fn replay_pipeline_runs_end_to_end_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path());
        let config = RunConfig::load(&dir.path().join("run.toml")).unwrap();
        let fixtures = dir.path().join("fixtures.jsonl");
        record_fixture_store(&config, &fixtures);

        let options = PipelineOptions {
            resume: false,
            replay: Some(fixtures.clone()),
            record: None,
        };
        let manifest = run_pipeline(&config, &options).unwrap();
        assert_eq!(manifest.suites, 1);
        assert_eq!(manifest.prompts, 2);
        assert!(manifest.finished.is_some());

        let report = std::fs::read_to_string(manifest.artifacts.get("report_md").unwrap()).unwrap();
        // alpha passes, beta exits 1
        assert!(
            report.contains("| 0 | 0 | 1 | 1 | 2 | 50 |"),
            "report:\n{report}"
        );

        // resume skips every step
        let resumed = run_pipeline(
            &config,
            &PipelineOptions {
                resume: true,
                replay: Some(fixtures),
                record: None,
            },
        )
        .unwrap();
        assert_eq!(resumed.prompts, 2);
    }

    #[test]
    fn record_mode_writes_a_replayable_store() {
        // generate against replay fixtures, then re-record them and compare
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path());
        let config = RunConfig::load(&dir.path().join("run.toml")).unwrap();
        let fixtures = dir.path().join("fixtures.jsonl");
        record_fixture_store(&config, &fixtures);

        let recorded = dir.path().join("recorded.jsonl");
        run_pipeline(
            &config,
            &PipelineOptions {
                resume: false,
                replay: Some(fixtures.clone()),
                record: Some(recorded.clone()),
            },
        )
        .unwrap();
        assert_eq!(
            std::fs::read(&fixtures).unwrap(),
            std::fs::read(&recorded).unwrap()
        );
    }
}
