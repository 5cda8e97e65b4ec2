//! `suitegen`: generate, run, and score compiler validation testsuites for
//! directive-based programming models using LLM endpoints.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use suitegen_core::analytics::{
    self, annotate_interactive, summarize_annotations, AnalysisSummary, AnnotationRecord,
    LanguageBreakdown, ReportFormat, SuiteReport,
};
use suitegen_core::corpus::{self, HeadingPattern};
use suitegen_core::extract::extract_suite;
use suitegen_core::finetune::{self, ContextMode};
use suitegen_core::gateway::{
    batch_generate, record_fixtures, FixtureStore, GenerationRecord, HttpBackend, ReplayBackend,
    RetryPolicy,
};
use suitegen_core::harness::{evaluate_suite, write_summary_csv, EvalEntry, RunPolicy};
use suitegen_core::pipeline::{run_pipeline, PipelineOptions, SuiteIndexEntry};
use suitegen_core::plan::{plan_arithmetic, validate_config, RunConfig, Severity};
use suitegen_core::prompt::{
    build_prompt_suites, AssetLibrary, PromptRecord, ResolvedStage, SuiteMetaRecord,
};
use suitegen_core::retrieval::RetrievalDb;
use suitegen_core::util::{read_jsonl, write_jsonl};
use suitegen_core::Scalar;

#[derive(Parser)]
#[command(
    name = "suitegen",
    about = "Generate and evaluate compiler validation testsuites with LLM endpoints",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a ToC-structured specification text into a section-index JSON.
    IngestSpec {
        /// UTF-8 specification text file.
        #[arg(long)]
        text: PathBuf,
        /// Output path for the key -> section JSON.
        #[arg(long)]
        out: PathBuf,
        /// Heading regex with two capture groups (key, title).
        #[arg(long)]
        heading_pattern: Option<String>,
    },
    /// Chunk and embed the specification into a retrieval database.
    BuildDb {
        #[arg(long)]
        spec_text: PathBuf,
        /// Output directory for chunks.jsonl, store.jsonl, meta.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "local-hash")]
        provider: ProviderArg,
        #[arg(long, default_value_t = 1000)]
        chunk_size: usize,
        #[arg(long, default_value_t = 100)]
        overlap: usize,
        /// Config file defining [retrieval.remote] when --provider remote.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Render every suite of the configured stage plans.
    GenPrompts {
        /// Run config with the stage plans.
        #[arg(long)]
        plan: PathBuf,
        /// Specification text (defaults to the config's spec_text).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Retrieval database directory (defaults to rebuilding in memory).
        #[arg(long)]
        db: Option<PathBuf>,
        /// Assets directory (defaults to the config's assets_dir).
        #[arg(long)]
        assets: Option<PathBuf>,
        /// Output directory for per-suite prompt and meta files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Send one suite's prompts to an endpoint (or replay fixtures).
    Generate {
        #[arg(long)]
        prompts: PathBuf,
        /// Endpoint name from the config.
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replay responses from this fixture store; no network.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Record responses into this fixture store.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        parallelism: usize,
    },
    /// Extract compilable tests from raw generations.
    Extract {
        #[arg(long)]
        generations: PathBuf,
        #[arg(long)]
        prompts: PathBuf,
        /// Directory for extracted test files plus outcomes.jsonl.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compile and run extracted tests under a compiler profile.
    Evaluate {
        /// Directory produced by `extract` (reads outcomes.jsonl).
        #[arg(long)]
        tests: PathBuf,
        /// Profile or profile-set name from the config.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Results ledger (JSON lines); a summary CSV is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate results ledgers into report tables.
    Report {
        /// Results ledger(s); repeat the flag for multiple suites.
        #[arg(long, required = true)]
        results: Vec<PathBuf>,
        /// Meta ledger(s), paired with --results by position.
        #[arg(long, required = true)]
        meta: Vec<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a fine-tuning dataset from a manual testsuite.
    BuildFinetune {
        /// Directory of manually written tests.
        #[arg(long)]
        suite: PathBuf,
        /// Specification text.
        #[arg(long)]
        spec: PathBuf,
        /// Retrieval database directory (from `build-db`).
        #[arg(long)]
        db: PathBuf,
        /// Output JSON-lines path; a manifest is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Embed top-k chunks instead of the full paired section.
        #[arg(long)]
        similarity_context: Option<usize>,
    },
    /// Interactively annotate evaluated tests.
    Annotate {
        /// Results ledger from `evaluate`.
        #[arg(long)]
        results: PathBuf,
        /// Annotation ledger to append to.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline described by a config file.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Validate a config: endpoints, profiles, assets, and plan arithmetic.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    LocalHash,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::IngestSpec {
            text,
            out,
            heading_pattern,
        } => ingest_spec(&text, &out, heading_pattern.as_deref()),
        Command::BuildDb {
            spec_text,
            out,
            provider,
            chunk_size,
            overlap,
            config,
        } => build_db(
            &spec_text,
            &out,
            provider,
            chunk_size,
            overlap,
            config.as_deref(),
        ),
        Command::GenPrompts {
            plan,
            spec,
            db,
            assets,
            out,
        } => gen_prompts(
            &plan,
            spec.as_deref(),
            db.as_deref(),
            assets.as_deref(),
            &out,
        ),
        Command::Generate {
            prompts,
            endpoint,
            config,
            out,
            replay,
            record,
            parallelism,
        } => generate(
            &prompts,
            &endpoint,
            &config,
            &out,
            replay.as_deref(),
            record.as_deref(),
            parallelism,
        ),
        Command::Extract {
            generations,
            prompts,
            out_dir,
        } => extract(&generations, &prompts, &out_dir),
        Command::Evaluate {
            tests,
            profile,
            config,
            timeout,
            workers,
            out,
        } => evaluate(&tests, &profile, &config, timeout, workers, &out),
        Command::Report {
            results,
            meta,
            annotations,
            format,
            out,
        } => report(&results, &meta, annotations.as_deref(), format, &out),
        Command::BuildFinetune {
            suite,
            spec,
            db,
            out,
            similarity_context,
        } => build_finetune(&suite, &spec, &db, &out, similarity_context),
        Command::Annotate { results, out } => annotate(&results, &out),
        Command::Run {
            plan,
            resume,
            replay,
            record,
        } => run(&plan, resume, replay, record),
        Command::Validate { config } => validate(&config),
    }
}

fn pattern_from(arg: Option<&str>) -> Result<HeadingPattern> {
    Ok(match arg {
        Some(p) => HeadingPattern::new(p)?,
        None => HeadingPattern::default(),
    })
}

fn ingest_spec(text: &Path, out: &Path, heading_pattern: Option<&str>) -> Result<()> {
    let source =
        std::fs::read_to_string(text).with_context(|| format!("cannot read {}", text.display()))?;
    let index = corpus::ingest(&source, &pattern_from(heading_pattern)?)?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, corpus::export_spec_json(&index))?;
    println!(
        "ingested {} sections from {} -> {}",
        index.len(),
        text.display(),
        out.display()
    );
    Ok(())
}

fn build_db(
    spec_text: &Path,
    out: &Path,
    provider: ProviderArg,
    chunk_size: usize,
    overlap: usize,
    config: Option<&Path>,
) -> Result<()> {
    let source = std::fs::read_to_string(spec_text)?;
    let provider = match provider {
        ProviderArg::LocalHash => suitegen_core::retrieval::EmbeddingProvider::LocalHash,
        ProviderArg::Remote => {
            let config_path =
                config.ok_or_else(|| anyhow::anyhow!("--provider remote requires --config"))?;
            let config = RunConfig::load(config_path)?;
            config.retrieval.provider()?
        }
    };
    let db = RetrievalDb::<Scalar>::build(&source, chunk_size, overlap, &provider)?;
    db.save(out)?;
    println!(
        "built retrieval db: {} chunks, dims {} -> {}",
        db.chunks.len(),
        db.meta.dims,
        out.display()
    );
    Ok(())
}

fn gen_prompts(
    plan: &Path,
    spec: Option<&Path>,
    db: Option<&Path>,
    assets: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let config = RunConfig::load(plan)?;
    let source = match spec {
        Some(path) => std::fs::read_to_string(path)?,
        None => config.load_spec_text()?,
    };
    let index = corpus::ingest(&source, &config.heading_pattern()?)?;
    let provider = config.retrieval.provider()?;
    let db = match db {
        Some(dir) => RetrievalDb::<Scalar>::load(dir)?,
        None => RetrievalDb::build(
            &source,
            config.retrieval.chunk_size,
            config.retrieval.overlap,
            &provider,
        )?,
    };
    let assets_dir = assets
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.resolve(&config.run.assets_dir));
    let assets = AssetLibrary::load(&assets_dir)?;

    std::fs::create_dir_all(out)?;
    let mut entries = Vec::new();
    let mut total = 0usize;
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
        for suite in build_prompt_suites(&resolved, &index, &db, &provider, &assets)? {
            let suite_id = suite.suite_id();
            let prompts_file = out.join(format!("{suite_id}.prompts.jsonl"));
            let meta_file = out.join(format!("{suite_id}.meta.jsonl"));
            write_jsonl(&prompts_file, &suite.records)?;
            write_jsonl(&meta_file, &suite.meta_records())?;
            total += suite.records.len();
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
    std::fs::write(
        out.join("suites.json"),
        serde_json::to_vec_pretty(&entries)?,
    )?;
    println!(
        "rendered {} suites / {} prompts -> {}",
        entries.len(),
        total,
        out.display()
    );
    Ok(())
}

fn generate(
    prompts: &Path,
    endpoint: &str,
    config: &Path,
    out: &Path,
    replay: Option<&Path>,
    record: Option<&Path>,
    parallelism: usize,
) -> Result<()> {
    let config = RunConfig::load(config)?;
    let prompt_records: Vec<PromptRecord> = read_jsonl(prompts)?;
    let retry = RetryPolicy {
        max_attempts: config.gateway.max_attempts,
        backoff_base_ms: config.gateway.backoff_base_ms,
    };
    let model_name = config
        .endpoints
        .get(endpoint)
        .map(|e| e.model_name.clone())
        .unwrap_or_else(|| endpoint.to_string());

    let records = match replay {
        Some(path) => {
            let store = FixtureStore::load(path)?;
            batch_generate(
                &prompt_records,
                &ReplayBackend::new(store, model_name),
                &retry,
                parallelism,
            )
        }
        None => {
            let endpoint_config = config
                .endpoints
                .get(endpoint)
                .with_context(|| format!("endpoint '{endpoint}' not in config"))?
                .clone();
            let backend = HttpBackend::new(endpoint_config)?;
            batch_generate(&prompt_records, &backend, &retry, parallelism)
        }
    };
    write_jsonl(out, &records)?;
    if let Some(path) = record {
        record_fixtures(&records, &prompt_records)?.save(path)?;
    }
    let failed = records
        .iter()
        .filter(|r| r.finish_reason == suitegen_core::gateway::FinishReason::Error)
        .count();
    println!(
        "generated {} responses ({failed} failed) -> {}",
        records.len(),
        out.display()
    );
    Ok(())
}

fn extract(generations: &Path, prompts: &Path, out_dir: &Path) -> Result<()> {
    let generation_records: Vec<GenerationRecord> = read_jsonl(generations)?;
    let prompt_records: Vec<PromptRecord> = read_jsonl(prompts)?;
    let outcomes = extract_suite(&generation_records, &prompt_records)?;
    std::fs::create_dir_all(out_dir)?;
    let mut extracted = 0usize;
    for outcome in &outcomes {
        if let Some(test) = outcome.as_test() {
            let path = out_dir.join(format!("{}.{}", test.prompt_id, test.language.extension()));
            std::fs::write(path, &test.code)?;
            extracted += 1;
        }
    }
    write_jsonl(&out_dir.join("outcomes.jsonl"), &outcomes)?;
    println!(
        "extracted {extracted}/{} tests -> {}",
        outcomes.len(),
        out_dir.display()
    );
    Ok(())
}

fn evaluate(
    tests: &Path,
    profile: &str,
    config: &Path,
    timeout: u64,
    workers: usize,
    out: &Path,
) -> Result<()> {
    let config = RunConfig::load(config)?;
    let outcomes_path = tests.join("outcomes.jsonl");
    let outcomes: Vec<suitegen_core::extract::ExtractionOutcome> = read_jsonl(&outcomes_path)
        .with_context(|| format!("cannot read {}", outcomes_path.display()))?;

    // resolve the profile name through a synthetic one-off stage
    let stage = suitegen_core::plan::StagePlan {
        name: "evaluate".into(),
        llms: Vec::new(),
        methods: Vec::new(),
        languages: vec!["c".into(), "cpp".into(), "fortran".into()],
        chapters: Vec::new(),
        permutation_rules_ref: None,
        compiler_profile: profile.to_string(),
        rag_mode: suitegen_core::retrieval::RagMode::Manual,
        features: None,
    };
    let profiles = config.stage_profiles(&stage)?;
    let policy = RunPolicy {
        timeout_s: timeout,
        ..RunPolicy::default()
    };
    let entries = evaluate_suite(&outcomes, &profiles, &policy, workers);
    write_jsonl(out, &entries)?;
    let summary = out.with_extension("summary.csv");
    write_summary_csv(&entries, &summary)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for entry in &entries {
        let key = match entry {
            EvalEntry::Record(r) => r.outcome.key(),
            EvalEntry::Fault(_) => "fault",
        };
        *counts.entry(key).or_default() += 1;
    }
    println!(
        "evaluated {} tests -> {} ({counts:?})",
        entries.len(),
        out.display()
    );
    Ok(())
}

fn report(
    results: &[PathBuf],
    meta: &[PathBuf],
    annotations: Option<&Path>,
    format: FormatArg,
    out: &Path,
) -> Result<()> {
    if results.len() != meta.len() {
        bail!(
            "{} --results files but {} --meta files; pass one --meta per --results",
            results.len(),
            meta.len()
        );
    }
    let mut reports: Vec<SuiteReport> = Vec::new();
    let mut breakdowns: BTreeMap<String, LanguageBreakdown> = BTreeMap::new();
    for (results_path, meta_path) in results.iter().zip(meta) {
        let entries: Vec<EvalEntry> = read_jsonl(results_path)?;
        let records: Vec<_> = entries
            .iter()
            .filter_map(|e| e.as_record())
            .cloned()
            .collect();
        let meta_records: Vec<SuiteMetaRecord> = read_jsonl(meta_path)?;
        let meta = analytics::meta_map(&meta_records);
        reports.extend(analytics::tabulate(&records, &meta)?);
        for (llm, breakdown) in analytics::language_breakdown(&records, &meta)? {
            let merged = breakdowns.entry(llm).or_default();
            for (lang, stats) in breakdown.per_language {
                let slot = merged.per_language.entry(lang).or_insert(
                    suitegen_core::analytics::LangStats {
                        pass: 0,
                        total: 0,
                        pct: 0.0,
                    },
                );
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

    let summary: Option<AnalysisSummary> = match annotations {
        Some(path) => {
            let records: Vec<AnnotationRecord> = read_jsonl(path)?;
            Some(summarize_annotations(&records)?)
        }
        None => None,
    };
    let bytes = analytics::render_report(
        &reports,
        &breakdowns,
        summary.as_ref(),
        match format {
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Csv => ReportFormat::Csv,
        },
    );
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, bytes)?;
    println!("report ({} suites) -> {}", reports.len(), out.display());
    Ok(())
}

fn build_finetune(
    suite: &Path,
    spec: &Path,
    db: &Path,
    out: &Path,
    similarity_context: Option<usize>,
) -> Result<()> {
    let source = std::fs::read_to_string(spec)?;
    let index = corpus::ingest(&source, &HeadingPattern::default())?;
    let db = RetrievalDb::<Scalar>::load(db)?;
    let provider = suitegen_core::retrieval::EmbeddingProvider::LocalHash;
    let mode = match similarity_context {
        Some(k) => ContextMode::Similarity { k },
        None => ContextMode::FullSection,
    };
    let (examples, manifest) =
        finetune::build_dataset(suite, &index, &db, &provider, finetune::DEFAULT_FRAME, mode)?;
    finetune::emit_jsonl(&examples, out)?;
    let manifest_path = out.with_extension("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
    println!(
        "dataset: {} examples ({:?}) -> {} (manifest {})",
        manifest.total,
        manifest.per_language,
        out.display(),
        manifest_path.display()
    );
    Ok(())
}

fn annotate(results: &Path, out: &Path) -> Result<()> {
    let entries: Vec<EvalEntry> = read_jsonl(results)?;
    let records: Vec<_> = entries
        .iter()
        .filter_map(|e| e.as_record())
        .cloned()
        .collect();
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut output = std::io::stdout();
    let annotations = annotate_interactive(&records, &mut input, &mut output)?;

    // append to the ledger
    let mut existing: Vec<AnnotationRecord> = if out.exists() {
        read_jsonl(out)?
    } else {
        Vec::new()
    };
    existing.extend(annotations);
    write_jsonl(out, &existing)?;
    writeln!(
        output,
        "wrote {} annotations -> {}",
        existing.len(),
        out.display()
    )?;
    Ok(())
}

fn run(plan: &Path, resume: bool, replay: Option<PathBuf>, record: Option<PathBuf>) -> Result<()> {
    let config = RunConfig::load(plan)?;
    let options = PipelineOptions {
        resume,
        replay,
        record,
    };
    let manifest = run_pipeline(&config, &options)?;
    println!(
        "run '{}': {} suites, {} prompts",
        manifest.plan_name, manifest.suites, manifest.prompts
    );
    for (stage, path) in &manifest.artifacts {
        println!("  {stage}: {}", path.display());
    }
    Ok(())
}

fn validate(config_path: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let (diagnostics, arithmetic) = validate_config(&config);
    for d in &diagnostics {
        let tag = match d.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        println!("{tag}: [{}] {}", d.code, d.message);
    }
    if let Some(arithmetic) = &arithmetic {
        println!("plan arithmetic:");
        for stage in &arithmetic.stages {
            println!(
                "  {}: {} suites x {} features = {} prompts",
                stage.name, stage.suites, stage.features_per_suite, stage.prompts
            );
        }
        println!(
            "  total: {} suites, {} prompts",
            arithmetic.total_suites, arithmetic.total_prompts
        );
    }
    let errors = diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .count();
    if errors > 0 {
        bail!("{errors} error diagnostic(s)");
    }
    // re-check arithmetic is printable even when diagnostics were clean
    let _ = plan_arithmetic(&config)?;
    println!("config ok");
    Ok(())
}
