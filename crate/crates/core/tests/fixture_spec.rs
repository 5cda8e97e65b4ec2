//! Checks against the bundled specification text: feature counts behind the
//! stage plans, provenance resolution, and export round trips.

use std::path::{Path, PathBuf};

use suitegen_core::corpus::{self, HeadingPattern};
use suitegen_core::lang::Language;
use suitegen_core::plan::RunConfig;
use suitegen_core::prompt::{
    build_prompt_suites, enumerate_features, expand_permutations, AssetLibrary, FeatureFilter,
    PromptMethod, ResolvedStage,
};
use suitegen_core::retrieval::{EmbeddingProvider, ProvenanceRef, RagMode, RetrievalDb};
use suitegen_core::Scalar;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spec_text() -> String {
    std::fs::read_to_string(repo_root().join("fixtures/spec/directive_spec.txt")).unwrap()
}

#[test]
fn chapter_2_and_3_leaves_number_95() {
    let index = corpus::ingest(&spec_text(), &HeadingPattern::default()).unwrap();
    let features =
        enumerate_features(&index, &[2, 3], &[Language::C], &FeatureFilter::default()).unwrap();
    assert_eq!(features.len(), 95);

    // three languages multiply the base selection
    let features = enumerate_features(
        &index,
        &[2, 3],
        &[Language::C, Language::Cpp, Language::Fortran],
        &FeatureFilter::default(),
    )
    .unwrap();
    assert_eq!(features.len(), 285);
}

#[test]
fn construct_permutation_reaches_351() {
    let config = RunConfig::load(&repo_root().join("configs/two_stage.toml")).unwrap();
    let index = corpus::ingest(&spec_text(), &HeadingPattern::default()).unwrap();
    let rules = &config.permutation_rules["compute-constructs"];

    // per language: 95 base features, 11 matched by the rule -> 117
    let base =
        enumerate_features(&index, &[2, 3], &[Language::C], &FeatureFilter::default()).unwrap();
    let expanded = expand_permutations(base, rules);
    assert_eq!(expanded.len(), 117);
    let permuted: Vec<_> = expanded
        .iter()
        .filter(|f| f.permutation_of.is_some())
        .collect();
    assert_eq!(permuted.len(), 33); // 11 clause sections x 3 constructs
    assert!(permuted
        .iter()
        .any(|f| f.name == "serial construct num_gangs clause"));

    // all three languages: the stage-2 suite size
    let base = enumerate_features(
        &index,
        &[2, 3],
        &[Language::C, Language::Cpp, Language::Fortran],
        &FeatureFilter::default(),
    )
    .unwrap();
    assert_eq!(expand_permutations(base, rules).len(), 351);
}

#[test]
fn rag_provenance_resolves_to_real_chunks_and_sections() {
    let text = spec_text();
    let index = corpus::ingest(&text, &HeadingPattern::default()).unwrap();
    let provider = EmbeddingProvider::LocalHash;
    let db = RetrievalDb::<Scalar>::build(&text, 1000, 100, &provider).unwrap();
    let mut assets = AssetLibrary::default();
    assets.set_template(Language::C, "TPL".into());

    let features =
        enumerate_features(&index, &[2], &[Language::C], &FeatureFilter::default()).unwrap();
    for mode in [RagMode::Manual, RagMode::Similarity] {
        let stage = ResolvedStage {
            name: "check".into(),
            llms: vec!["m".into()],
            methods: vec![PromptMethod::ExpressiveTemplateRag],
            features: features.clone(),
            rag_mode: mode,
            k: 3,
        };
        let suites = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
        for record in &suites[0].records {
            assert!(!record.context_provenance.is_empty());
            for reference in &record.context_provenance {
                match reference {
                    ProvenanceRef::Chunk(id) => assert!(*id < db.chunks.len()),
                    ProvenanceRef::Section(key) => assert!(index.contains_key(key)),
                }
            }
        }
    }
}

#[test]
fn rendering_the_two_stage_plan_yields_35_suites_and_5117_prompts() {
    let root = repo_root();
    let config = RunConfig::load(&root.join("configs/two_stage.toml")).unwrap();
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

    let mut suites = 0usize;
    let mut prompts = 0usize;
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
        for suite in build_prompt_suites(&resolved, &index, &db, &provider, &assets).unwrap() {
            suites += 1;
            prompts += suite.records.len();
            assert!(suite.records.iter().all(|r| !r.text.is_empty()));
        }
    }
    assert_eq!(suites, 35);
    assert_eq!(prompts, 5117);
}

#[test]
fn one_llm_with_five_methods_renders_475_prompts() {
    let config = RunConfig::load(&repo_root().join("configs/two_stage.toml")).unwrap();
    let text = config.load_spec_text().unwrap();
    let index = corpus::ingest(&text, &config.heading_pattern().unwrap()).unwrap();
    let provider = EmbeddingProvider::LocalHash;
    let db = RetrievalDb::<Scalar>::build(&text, 1000, 100, &provider).unwrap();
    let assets = AssetLibrary::load(&config.resolve(&config.run.assets_dir)).unwrap();

    let features = enumerate_features(&index, &[2, 3], &[Language::C], &FeatureFilter::default())
        .unwrap();
    let stage = ResolvedStage {
        name: "stage1-single".into(),
        llms: vec!["one-model".into()],
        methods: PromptMethod::ALL.to_vec(),
        features,
        rag_mode: RagMode::Similarity,
        k: 3,
    };
    let suites = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
    assert_eq!(suites.len(), 5);
    let total: usize = suites.iter().map(|s| s.records.len()).sum();
    assert_eq!(total, 475);
    // non-RAG methods carry no provenance, RAG methods always do
    for suite in &suites {
        for record in &suite.records {
            assert_eq!(
                record.context_provenance.is_empty(),
                !suite.method.uses_rag()
            );
        }
    }
}

#[test]
fn export_round_trips_the_bundled_spec() {
    let index = corpus::ingest(&spec_text(), &HeadingPattern::default()).unwrap();
    let bytes = corpus::export_spec_json(&index);
    let back = corpus::import_spec_json(&bytes).unwrap();
    assert_eq!(back.len(), index.len());
    for (a, b) in index.sections().zip(back.sections()) {
        assert_eq!(a.key, b.key);
        assert_eq!(a.body, b.body);
    }
}
