//! Prompt construction: the five prompt methods, feature enumeration, and
//! suite rendering.
//!
//! Two frames are fixed verbatim: the one-sentence request and the expressive
//! frame (see [`EXPRESSIVE_FRAME`]). The remaining methods compose the
//! one-sentence request with labeled `Context:` / `Template:` blocks and the
//! one-shot example; their exact layouts are documented on [`render_prompt`].

mod assets;
mod feature;
mod suite;

pub use assets::{AssetLibrary, OneShotExample};
pub use feature::{enumerate_features, expand_permutations, FeatureFilter, PermutationRule};
pub use suite::{build_prompt_suites, PromptSuite, ResolvedStage, SuiteMetaRecord};

pub(crate) use feature::feature_name as feature_display;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Language;
use crate::retrieval::{ProvenanceRef, RetrievalError, RetrievedContext};
use crate::util::short_digest;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("no asset of kind {kind} for language {language}")]
    MissingAsset {
        language: Language,
        kind: &'static str,
    },
    #[error("method {0} requires retrieved context but none was supplied")]
    MissingContext(PromptMethod),
    #[error("feature selection is empty")]
    EmptySelection,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// One feature to generate a test for, tied to the spec section describing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Human-readable feature name, e.g. "parallel construct num_gangs clause".
    pub name: String,
    /// ToC key of the section describing the feature.
    pub section_key: String,
    pub base_language: Language,
    /// Construct name when this feature was produced by permutation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_of: Option<String>,
}

impl FeatureSpec {
    /// The one-sentence request for this feature; also used as the
    /// similarity-search query in RAG mode.
    pub fn prompt_stem(&self) -> String {
        SIMPLE_REQUEST
            .replace("{language}", &self.base_language.to_string())
            .replace("{feature}", &self.name)
    }
}

/// The five prompt methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMethod {
    Template,
    TemplateRag,
    OneShot,
    OneShotRag,
    ExpressiveTemplateRag,
}

impl PromptMethod {
    pub const ALL: [PromptMethod; 5] = [
        PromptMethod::Template,
        PromptMethod::TemplateRag,
        PromptMethod::OneShot,
        PromptMethod::OneShotRag,
        PromptMethod::ExpressiveTemplateRag,
    ];

    pub fn uses_rag(self) -> bool {
        matches!(
            self,
            PromptMethod::TemplateRag
                | PromptMethod::OneShotRag
                | PromptMethod::ExpressiveTemplateRag
        )
    }

    pub fn uses_template(self) -> bool {
        matches!(
            self,
            PromptMethod::Template
                | PromptMethod::TemplateRag
                | PromptMethod::ExpressiveTemplateRag
        )
    }

    pub fn uses_oneshot(self) -> bool {
        matches!(self, PromptMethod::OneShot | PromptMethod::OneShotRag)
    }

    /// Column label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            PromptMethod::Template => "Template",
            PromptMethod::TemplateRag => "Template + RAG",
            PromptMethod::OneShot => "Oneshot",
            PromptMethod::OneShotRag => "Oneshot + RAG",
            PromptMethod::ExpressiveTemplateRag => "Expressive + Template + RAG",
        }
    }

    /// Stable key used in file names and metadata records.
    pub fn key(self) -> &'static str {
        match self {
            PromptMethod::Template => "template",
            PromptMethod::TemplateRag => "template-rag",
            PromptMethod::OneShot => "one-shot",
            PromptMethod::OneShotRag => "one-shot-rag",
            PromptMethod::ExpressiveTemplateRag => "expressive-template-rag",
        }
    }
}

impl fmt::Display for PromptMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One fully rendered prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    /// Stable hash of method, feature, and language.
    pub id: String,
    pub method: PromptMethod,
    pub feature: FeatureSpec,
    pub text: String,
    /// Chunk ids or section keys the context was assembled from; empty for
    /// non-RAG methods.
    pub context_provenance: Vec<ProvenanceRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneshot_id: Option<String>,
}

/// One-sentence request.
pub const SIMPLE_REQUEST: &str = "Write a code in {language} to verify compiler implementation of the OpenACC specification of the {feature}.";

/// The expressive frame, rendered byte-for-byte with `{language}`,
/// `{feature}`, `{context}`, and `{template}` substituted.
pub const EXPRESSIVE_FRAME: &str = "Write a code in {language} to verify compiler implementation of the OpenACC specification of {feature}. \n\nMake sure to follow the template of the format provided. Include the provided header file, and any other necessary libraries.\nWrite simple code to test {feature} in {language}. Try to isolate that feature while still using it correctly.\nThis code is part of a testsuite that will be ran, so write complete code, don't leave it unfinished.\nThe goal is to return 0 if the target feature, {feature}, is working properly, and not zero otherwise.\nThe context below is from the most recent OpenACC specification, make sure to refer to it to produce up to date code.\n\nContext: {context}\n\nTemplate: {template}\n";

/// Render one prompt. Layouts by method:
///
/// - `Template`: request, blank line, `Template:` block.
/// - `TemplateRag`: request, `Context:` block, then `Template:` block.
/// - `OneShot`: example prompt, example test, then the request.
/// - `OneShotRag`: example prompt, example test, `Context:` block, request.
/// - `ExpressiveTemplateRag`: [`EXPRESSIVE_FRAME`] verbatim.
///
/// RAG methods must receive retrieved context with non-empty provenance.
pub fn render_prompt(
    method: PromptMethod,
    feature: &FeatureSpec,
    assets: &AssetLibrary,
    context: Option<&RetrievedContext>,
) -> Result<PromptRecord, PromptError> {
    let language = feature.base_language;
    let ctx = if method.uses_rag() {
        let ctx = context.ok_or(PromptError::MissingContext(method))?;
        if ctx.provenance.is_empty() {
            return Err(PromptError::MissingContext(method));
        }
        Some(ctx)
    } else {
        None
    };

    let mut template_id = None;
    let mut oneshot_id = None;
    let request = feature.prompt_stem();

    let text = match method {
        PromptMethod::Template => {
            let template = assets.template(language)?;
            template_id = Some(template.id.clone());
            format!("{request}\n\nTemplate: {}\n", template.text)
        }
        PromptMethod::TemplateRag => {
            let template = assets.template(language)?;
            template_id = Some(template.id.clone());
            format!(
                "{request}\n\nContext: {}\n\nTemplate: {}\n",
                ctx.unwrap().text,
                template.text
            )
        }
        PromptMethod::OneShot => {
            let example = assets.oneshot(language)?;
            oneshot_id = Some(example.id.clone());
            format!("{}\n\n{}\n\n{request}\n", example.prompt, example.test)
        }
        PromptMethod::OneShotRag => {
            let example = assets.oneshot(language)?;
            oneshot_id = Some(example.id.clone());
            format!(
                "{}\n\n{}\n\nContext: {}\n\n{request}\n",
                example.prompt,
                example.test,
                ctx.unwrap().text
            )
        }
        PromptMethod::ExpressiveTemplateRag => {
            let template = assets.template(language)?;
            template_id = Some(template.id.clone());
            EXPRESSIVE_FRAME
                .replace("{language}", &language.to_string())
                .replace("{feature}", &feature.name)
                .replace("{context}", &ctx.unwrap().text)
                .replace("{template}", &template.text)
        }
    };

    Ok(PromptRecord {
        id: prompt_id(method, feature),
        method,
        feature: feature.clone(),
        text,
        context_provenance: ctx.map(|c| c.provenance.clone()).unwrap_or_default(),
        template_id,
        oneshot_id,
    })
}

/// Stable prompt id: hash of method, feature identity, and language.
pub fn prompt_id(method: PromptMethod, feature: &FeatureSpec) -> String {
    let src = format!(
        "{}|{}|{}|{}|{}",
        method.key(),
        feature.name,
        feature.section_key,
        feature.base_language,
        feature.permutation_of.as_deref().unwrap_or("")
    );
    short_digest(src.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::RetrievedContext;

    fn assets() -> AssetLibrary {
        let mut lib = AssetLibrary::default();
        lib.set_template(Language::C, "TEMPLATE-C".to_string());
        lib.set_oneshot(Language::C, "EX-PROMPT".to_string(), "EX-TEST".to_string());
        lib
    }

    fn ctx(text: &str) -> RetrievedContext {
        RetrievedContext {
            text: text.to_string(),
            provenance: vec![ProvenanceRef::Section("2.5.1".to_string())],
            empty_store: false,
        }
    }

    fn feature() -> FeatureSpec {
        FeatureSpec {
            name: "acc delete routine".to_string(),
            section_key: "3.2.24".to_string(),
            base_language: Language::C,
            permutation_of: None,
        }
    }

    #[test]
    fn expressive_frame_renders_byte_for_byte() {
        let record = render_prompt(
            PromptMethod::ExpressiveTemplateRag,
            &feature(),
            &assets(),
            Some(&ctx("CTX")),
        )
        .unwrap();
        let expected = "Write a code in C to verify compiler implementation of the OpenACC specification of acc delete routine. \n\nMake sure to follow the template of the format provided. Include the provided header file, and any other necessary libraries.\nWrite simple code to test acc delete routine in C. Try to isolate that feature while still using it correctly.\nThis code is part of a testsuite that will be ran, so write complete code, don't leave it unfinished.\nThe goal is to return 0 if the target feature, acc delete routine, is working properly, and not zero otherwise.\nThe context below is from the most recent OpenACC specification, make sure to refer to it to produce up to date code.\n\nContext: CTX\n\nTemplate: TEMPLATE-C\n";
        assert_eq!(record.text, expected);
        assert_eq!(
            record.context_provenance,
            vec![ProvenanceRef::Section("2.5.1".to_string())]
        );
        assert!(record.template_id.is_some());
        assert!(record.oneshot_id.is_none());
    }

    #[test]
    fn template_method_has_no_context_block() {
        let record = render_prompt(PromptMethod::Template, &feature(), &assets(), None).unwrap();
        assert!(!record.text.contains("Context:"));
        assert!(record.text.contains("Template: TEMPLATE-C"));
        assert!(record.context_provenance.is_empty());
    }

    #[test]
    fn template_rag_places_context_before_template() {
        let record = render_prompt(
            PromptMethod::TemplateRag,
            &feature(),
            &assets(),
            Some(&ctx("CTX")),
        )
        .unwrap();
        let ctx_pos = record.text.find("Context: CTX").unwrap();
        let tpl_pos = record.text.find("Template: TEMPLATE-C").unwrap();
        assert!(ctx_pos < tpl_pos);
        assert!(!record.context_provenance.is_empty());
    }

    #[test]
    fn oneshot_layout_and_missing_asset() {
        let record = render_prompt(PromptMethod::OneShot, &feature(), &assets(), None).unwrap();
        let p = record.text.find("EX-PROMPT").unwrap();
        let t = record.text.find("EX-TEST").unwrap();
        let r = record.text.find("Write a code in C").unwrap();
        assert!(p < t && t < r);

        let mut f = feature();
        f.base_language = Language::Fortran;
        let err = render_prompt(PromptMethod::OneShot, &f, &assets(), None).unwrap_err();
        assert!(matches!(err, PromptError::MissingAsset { .. }));
    }

    #[test]
    fn oneshot_rag_places_context_before_request() {
        let record = render_prompt(
            PromptMethod::OneShotRag,
            &feature(),
            &assets(),
            Some(&ctx("CTX")),
        )
        .unwrap();
        let c = record.text.find("Context: CTX").unwrap();
        let r = record.text.find("Write a code in C").unwrap();
        assert!(c < r);
    }

    #[test]
    fn rag_methods_require_context() {
        let err =
            render_prompt(PromptMethod::TemplateRag, &feature(), &assets(), None).unwrap_err();
        assert!(matches!(err, PromptError::MissingContext(_)));
    }

    #[test]
    fn ids_are_stable_and_distinguish_method_language() {
        let f = feature();
        let a = prompt_id(PromptMethod::Template, &f);
        let b = prompt_id(PromptMethod::Template, &f);
        assert_eq!(a, b);
        assert_ne!(a, prompt_id(PromptMethod::OneShot, &f));
        let mut g = f.clone();
        g.base_language = Language::Cpp;
        assert_ne!(a, prompt_id(PromptMethod::Template, &g));
    }
}
