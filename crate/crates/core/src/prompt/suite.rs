//! Suite rendering: one testsuite per (LLM, method) pair over a stage's
//! feature list.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{render_prompt, FeatureSpec, PromptError, PromptMethod, PromptRecord};
use crate::corpus::SpecIndex;
use crate::lang::Language;
use crate::retrieval::{
    retrieve_context, EmbeddingProvider, RagMode, RetrievalDb, RetrievedContext,
};

/// A stage plan with its feature list already enumerated and permuted.
#[derive(Debug, Clone)]
pub struct ResolvedStage {
    pub name: String,
    /// Endpoint names; one suite is rendered per (llm, method) pair.
    pub llms: Vec<String>,
    pub methods: Vec<PromptMethod>,
    pub features: Vec<FeatureSpec>,
    pub rag_mode: RagMode,
    /// Top-k chunks concatenated in similarity mode.
    pub k: usize,
}

/// One rendered testsuite.
#[derive(Debug, Clone)]
pub struct PromptSuite {
    pub stage: String,
    pub llm: String,
    pub method: PromptMethod,
    pub records: Vec<PromptRecord>,
}

/// Per-prompt metadata line tying a prompt id to its suite for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteMetaRecord {
    pub prompt_id: String,
    pub llm: String,
    pub method: PromptMethod,
    pub language: Language,
}

impl PromptSuite {
    /// File-system friendly suite identifier, unique within a plan.
    pub fn suite_id(&self) -> String {
        format!(
            "{}__{}__{}",
            sanitize(&self.stage),
            sanitize(&self.llm),
            self.method.key()
        )
    }

    pub fn meta_records(&self) -> Vec<SuiteMetaRecord> {
        self.records
            .iter()
            .map(|r| SuiteMetaRecord {
                prompt_id: r.id.clone(),
                llm: self.llm.clone(),
                method: self.method,
                language: r.feature.base_language,
            })
            .collect()
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Render every suite of a stage: contexts are retrieved once per feature,
/// then reused across the (llm, method) grid. Suites come out in plan order
/// (llms outer, methods inner) regardless of any internal parallelism.
pub fn build_prompt_suites<F: Float>(
    stage: &ResolvedStage,
    index: &SpecIndex,
    db: &RetrievalDb<F>,
    provider: &EmbeddingProvider,
    assets: &super::AssetLibrary,
) -> Result<Vec<PromptSuite>, PromptError> {
    let needs_rag = stage.methods.iter().any(|m| m.uses_rag());
    let contexts: Vec<Option<RetrievedContext>> = if needs_rag {
        stage
            .features
            .iter()
            .map(|f| retrieve_context(index, db, provider, f, stage.rag_mode, stage.k).map(Some))
            .collect::<Result<_, _>>()?
    } else {
        vec![None; stage.features.len()]
    };

    let mut suites = Vec::with_capacity(stage.llms.len() * stage.methods.len());
    for llm in &stage.llms {
        for &method in &stage.methods {
            let records = stage
                .features
                .iter()
                .zip(&contexts)
                .map(|(feature, context)| {
                    let ctx = if method.uses_rag() {
                        context.as_ref()
                    } else {
                        None
                    };
                    render_prompt(method, feature, assets, ctx)
                })
                .collect::<Result<Vec<_>, _>>()?;
            suites.push(PromptSuite {
                stage: stage.name.clone(),
                llm: llm.clone(),
                method,
                records,
            });
        }
    }
    Ok(suites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest, HeadingPattern};
    use crate::prompt::AssetLibrary;

    const DOC: &str = "2.5 Compute Constructs\nintro\n\
                       2.5.1 Parallel Construct\nparallel body\n\
                       2.5.4 if clause\nif body\n";

    fn fixture() -> (SpecIndex, RetrievalDb<f64>, EmbeddingProvider, AssetLibrary) {
        let index = ingest(DOC, &HeadingPattern::default()).unwrap();
        let provider = EmbeddingProvider::LocalHash;
        let db = RetrievalDb::<f64>::build(DOC, 30, 5, &provider).unwrap();
        let mut assets = AssetLibrary::default();
        assets.set_template(Language::C, "TPL".into());
        assets.set_oneshot(Language::C, "EXP".into(), "EXT".into());
        (index, db, provider, assets)
    }

    fn features() -> Vec<FeatureSpec> {
        vec![
            FeatureSpec {
                name: "parallel construct".into(),
                section_key: "2.5.1".into(),
                base_language: Language::C,
                permutation_of: None,
            },
            FeatureSpec {
                name: "compute constructs if clause".into(),
                section_key: "2.5.4".into(),
                base_language: Language::C,
                permutation_of: None,
            },
        ]
    }

    #[test]
    fn grid_order_is_llm_outer_method_inner() {
        let (index, db, provider, assets) = fixture();
        let stage = ResolvedStage {
            name: "s1".into(),
            llms: vec!["alpha".into(), "beta".into()],
            methods: vec![PromptMethod::Template, PromptMethod::TemplateRag],
            features: features(),
            rag_mode: RagMode::Manual,
            k: 3,
        };
        let suites = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
        let ids: Vec<_> = suites.iter().map(|s| s.suite_id()).collect();
        assert_eq!(
            ids,
            [
                "s1__alpha__template",
                "s1__alpha__template-rag",
                "s1__beta__template",
                "s1__beta__template-rag"
            ]
        );
        assert!(suites.iter().all(|s| s.records.len() == 2));
        // same prompt content across llms for the same method
        assert_eq!(suites[0].records[0].text, suites[2].records[0].text);
        assert_eq!(suites[0].records[0].id, suites[2].records[0].id);
    }

    #[test]
    fn rerendering_is_deterministic() {
        let (index, db, provider, assets) = fixture();
        let stage = ResolvedStage {
            name: "s1".into(),
            llms: vec!["alpha".into()],
            methods: vec![PromptMethod::ExpressiveTemplateRag],
            features: features(),
            rag_mode: RagMode::Similarity,
            k: 2,
        };
        let a = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
        let b = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
        assert_eq!(a[0].records, b[0].records);
    }

    #[test]
    fn empty_plan_renders_no_suites() {
        let (index, db, provider, assets) = fixture();
        let stage = ResolvedStage {
            name: "s1".into(),
            llms: Vec::new(),
            methods: vec![PromptMethod::Template],
            features: features(),
            rag_mode: RagMode::Manual,
            k: 3,
        };
        let suites = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
        assert!(suites.is_empty());
    }

    #[test]
    fn meta_records_carry_suite_identity() {
        let (index, db, provider, assets) = fixture();
        let stage = ResolvedStage {
            name: "s1".into(),
            llms: vec!["alpha".into()],
            methods: vec![PromptMethod::Template],
            features: features(),
            rag_mode: RagMode::Manual,
            k: 3,
        };
        let suites = build_prompt_suites(&stage, &index, &db, &provider, &assets).unwrap();
        let meta = suites[0].meta_records();
        assert_eq!(meta.len(), 2);
        assert!(meta.iter().all(|m| m.llm == "alpha"));
        assert_eq!(meta[0].prompt_id, suites[0].records[0].id);
    }
}
