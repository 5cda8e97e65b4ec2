//! Regenerate `fixtures/replay/demo_generations.jsonl`, the canned responses
//! behind the offline demo plan. Run after changing prompt frames, assets,
//! or the demo feature selection:
//!
//! ```sh
//! cargo run -p suitegen-cli --example make_demo_fixtures
//! ```

use std::path::Path;

use suitegen_core::corpus;
use suitegen_core::gateway::FixtureStore;
use suitegen_core::plan::RunConfig;
use suitegen_core::prompt::{build_prompt_suites, AssetLibrary, ResolvedStage};
use suitegen_core::retrieval::RetrievalDb;
use suitegen_core::Scalar;

/// Canned response for one prompt, keyed on the feature named in the request
/// line (the first line, so retrieved context cannot confuse the match). The
/// mix covers all four outcomes so the demo report has every column populated.
fn canned_response(prompt_text: &str) -> String {
    let prompt_text = prompt_text.lines().next().unwrap_or_default();
    if prompt_text.contains("atomic construct") {
        // parsing error: no code terminator at all
        return "Validating atomicity requires inspecting generated device code, \
                which a runtime test cannot observe directly. One would need\n"
            .to_string();
    }
    if prompt_text.contains("num_gangs clause") {
        // compile error: missing semicolon
        return "```c\n#include \"acc_testsuite.h\"\n\nint main() {\n    int err = 0\n    return err;\n}\n```\n".to_string();
    }
    if prompt_text.contains("delete clause") {
        // runtime fail: validation logic inverted
        return "```c\n#include \"acc_testsuite.h\"\n\nint main() {\n    int present = 0;\n    if (present == 0) {\n        return 1;\n    }\n    return 0;\n}\n```\n".to_string();
    }
    // pass: well-formed self-checking test
    "```c\n#include \"acc_testsuite.h\"\n\n#ifndef T1\nint test1() {\n    int err = 0;\n    int data[8];\n    for (int i = 0; i < 8; ++i) {\n        data[i] = i * 2;\n    }\n    for (int i = 0; i < 8; ++i) {\n        if (data[i] != i * 2) {\n            err = 1;\n        }\n    }\n    return err;\n}\n#endif\n\nint main() {\n    int failcode = 0;\n    int failed;\n\n#ifndef T1\n    failed = 0;\n    for (int x = 0; x < NUM_TEST_CALLS; ++x) {\n        failed = failed + test1();\n    }\n    if (failed != 0) {\n        failcode = failcode + (1 << 0);\n    }\n#endif\n\n    return failcode;\n}\n```\n".to_string()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config = RunConfig::load(&root.join("configs/demo_run.toml"))?;

    let spec = config.load_spec_text()?;
    let index = corpus::ingest(&spec, &config.heading_pattern()?)?;
    let provider = config.retrieval.provider()?;
    let db = RetrievalDb::<Scalar>::build(
        &spec,
        config.retrieval.chunk_size,
        config.retrieval.overlap,
        &provider,
    )?;
    let assets = AssetLibrary::load(&config.resolve(&config.run.assets_dir))?;

    let mut store = FixtureStore::default();
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
            for prompt in &suite.records {
                store.insert(&prompt.text, canned_response(&prompt.text));
                total += 1;
            }
        }
    }

    let out = root.join("fixtures/replay/demo_generations.jsonl");
    std::fs::create_dir_all(out.parent().unwrap())?;
    store.save(&out)?;
    println!(
        "wrote {} fixtures ({total} prompts) -> {}",
        store.len(),
        out.display()
    );
    Ok(())
}
