//! Run-plan configuration: endpoints, compiler profiles, stage plans, and
//! config validation with plan arithmetic.
//!
//! One TOML file describes a whole run. Relative paths inside the file are
//! resolved against the file's own directory, so configs can ship with the
//! repository and run from anywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, HeadingPattern, SpecIndex};
use crate::gateway::ModelEndpoint;
use crate::harness::CompilerProfile;
use crate::lang::Language;
use crate::prompt::{
    enumerate_features, expand_permutations, FeatureFilter, PermutationRule, PromptMethod,
};
use crate::retrieval::{EmbeddingProvider, RagMode, RemoteEmbedder};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("config error: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Prompt(#[from] crate::prompt::PromptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSettings {
    pub name: String,
    /// UTF-8 specification text.
    pub spec_text: PathBuf,
    pub assets_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Override for the heading regex; two capture groups (key, title).
    #[serde(default)]
    pub heading_pattern: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalSettings {
    /// `local-hash` or `remote`.
    pub provider: String,
    pub chunk_size: usize,
    pub overlap: usize,
    /// Top-k chunks concatenated in similarity mode.
    pub k: usize,
    pub remote: Option<RemoteEmbedder>,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        Self {
            provider: "local-hash".to_string(),
            chunk_size: 1000,
            overlap: 100,
            k: 3,
            remote: None,
        }
    }
}

impl RetrievalSettings {
    pub fn provider(&self) -> Result<EmbeddingProvider, PlanError> {
        match self.provider.as_str() {
            "local-hash" => Ok(EmbeddingProvider::LocalHash),
            "remote" => self
                .remote
                .clone()
                .map(EmbeddingProvider::Remote)
                .ok_or_else(|| {
                    PlanError::Invalid(
                        "provider is 'remote' but [retrieval.remote] is missing".into(),
                    )
                }),
            other => Err(PlanError::Invalid(format!(
                "unknown embedding provider '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewaySettings {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub parallelism: usize,
}

impl Default for GatewaySettings {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base_ms: 2000,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessSettings {
    pub timeout_s: u64,
    pub workers: usize,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        Self {
            timeout_s: 60,
            workers: 4,
        }
    }
}

/// One stage of the run: a grid of (llm, method) suites over one feature
/// selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StagePlan {
    pub name: String,
    /// Endpoint names; one suite per (llm, method).
    pub llms: Vec<String>,
    pub methods: Vec<PromptMethod>,
    /// Language keys: `c`, `cpp`, `fortran`.
    pub languages: Vec<String>,
    pub chapters: Vec<u32>,
    /// Name of an entry in `[permutation_rules]`; absent means no
    /// permutation in this stage.
    #[serde(default)]
    pub permutation_rules_ref: Option<String>,
    /// Name of a `[profile_sets]` entry, or of a single profile.
    pub compiler_profile: String,
    #[serde(default = "default_rag_mode")]
    pub rag_mode: RagMode,
    /// Stage-local override of the global feature filter.
    #[serde(default)]
    pub features: Option<FeatureFilter>,
}

fn default_rag_mode() -> RagMode {
    RagMode::Manual
}

impl StagePlan {
    pub fn parsed_languages(&self) -> Result<Vec<Language>, PlanError> {
        self.languages
            .iter()
            .map(|s| {
                Language::parse_key(s)
                    .ok_or_else(|| PlanError::Invalid(format!("unknown language '{s}'")))
            })
            .collect()
    }
}

/// Compiler profile as written in config: header contents may be inline or
/// referenced by path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub language: String,
    pub compile_command: String,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    #[serde(default)]
    pub support_headers: BTreeMap<String, String>,
    /// File name -> path; contents are read at load time and merged over
    /// `support_headers`.
    #[serde(default)]
    pub support_header_files: BTreeMap<String, PathBuf>,
}

/// The whole run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSettings,
    #[serde(default)]
    pub retrieval: RetrievalSettings,
    #[serde(default)]
    pub gateway: GatewaySettings,
    #[serde(default)]
    pub harness: HarnessSettings,
    #[serde(default)]
    pub endpoints: BTreeMap<String, ModelEndpoint>,
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileConfig>,
    /// Named groups mapping language keys to profile names.
    #[serde(default)]
    pub profile_sets: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub permutation_rules: BTreeMap<String, Vec<PermutationRule>>,
    /// Global feature filter (stages may override).
    #[serde(default)]
    pub features: FeatureFilter,
    #[serde(default)]
    pub stages: Vec<StagePlan>,
    /// Directory of the config file; set at load time.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path).map_err(|source| PlanError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| PlanError::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(config)
    }

    /// Resolve a config-relative path.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn heading_pattern(&self) -> Result<HeadingPattern, PlanError> {
        Ok(match &self.run.heading_pattern {
            Some(pattern) => HeadingPattern::new(pattern)?,
            None => HeadingPattern::default(),
        })
    }

    pub fn load_spec_text(&self) -> Result<String, PlanError> {
        Ok(std::fs::read_to_string(self.resolve(&self.run.spec_text))?)
    }

    pub fn permutation_rules_for(
        &self,
        stage: &StagePlan,
    ) -> Result<Vec<PermutationRule>, PlanError> {
        match &stage.permutation_rules_ref {
            None => Ok(Vec::new()),
            Some(name) => self.permutation_rules.get(name).cloned().ok_or_else(|| {
                PlanError::Invalid(format!(
                    "stage '{}' references unknown permutation rules '{name}'",
                    stage.name
                ))
            }),
        }
    }

    pub fn feature_filter_for<'a>(&'a self, stage: &'a StagePlan) -> &'a FeatureFilter {
        stage.features.as_ref().unwrap_or(&self.features)
    }

    /// Enumerate and permute the features of one stage against an ingested
    /// spec index.
    pub fn stage_features(
        &self,
        stage: &StagePlan,
        index: &SpecIndex,
    ) -> Result<Vec<crate::prompt::FeatureSpec>, PlanError> {
        let languages = stage.parsed_languages()?;
        let features = enumerate_features(
            index,
            &stage.chapters,
            &languages,
            self.feature_filter_for(stage),
        )?;
        let rules = self.permutation_rules_for(stage)?;
        Ok(expand_permutations(features, &rules))
    }

    /// Materialize the compiler profiles a stage needs, keyed by language,
    /// with header files read in.
    pub fn stage_profiles(
        &self,
        stage: &StagePlan,
    ) -> Result<BTreeMap<Language, CompilerProfile>, PlanError> {
        let mut name_by_lang: BTreeMap<Language, &str> = BTreeMap::new();
        if let Some(set) = self.profile_sets.get(&stage.compiler_profile) {
            for (lang_key, profile_name) in set {
                let lang = Language::parse_key(lang_key).ok_or_else(|| {
                    PlanError::Invalid(format!(
                        "profile set '{}' has unknown language '{lang_key}'",
                        stage.compiler_profile
                    ))
                })?;
                name_by_lang.insert(lang, profile_name);
            }
        } else if self.profiles.contains_key(&stage.compiler_profile) {
            let profile = &self.profiles[&stage.compiler_profile];
            let lang = Language::parse_key(&profile.language).ok_or_else(|| {
                PlanError::Invalid(format!(
                    "profile '{}' has unknown language '{}'",
                    stage.compiler_profile, profile.language
                ))
            })?;
            name_by_lang.insert(lang, &stage.compiler_profile);
        } else {
            return Err(PlanError::Invalid(format!(
                "stage '{}' references unknown compiler profile '{}'",
                stage.name, stage.compiler_profile
            )));
        }

        let mut profiles = BTreeMap::new();
        for (lang, name) in name_by_lang {
            let config = self.profiles.get(name).ok_or_else(|| {
                PlanError::Invalid(format!("profile set references unknown profile '{name}'"))
            })?;
            profiles.insert(lang, self.materialize_profile(config)?);
        }
        Ok(profiles)
    }

    fn materialize_profile(&self, config: &ProfileConfig) -> Result<CompilerProfile, PlanError> {
        let language = Language::parse_key(&config.language).ok_or_else(|| {
            PlanError::Invalid(format!(
                "profile has unknown language '{}'",
                config.language
            ))
        })?;
        let mut support_headers = config.support_headers.clone();
        for (name, path) in &config.support_header_files {
            let content = std::fs::read_to_string(self.resolve(path))?;
            support_headers.insert(name.clone(), content);
        }
        Ok(CompilerProfile {
            language,
            compile_command: config.compile_command.clone(),
            env: config.env.clone(),
            support_headers,
        })
    }
}

/// Per-stage and total suite/prompt counts, computed without contacting any
/// endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanArithmetic {
    pub stages: Vec<StageArithmetic>,
    pub total_suites: usize,
    pub total_prompts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageArithmetic {
    pub name: String,
    pub suites: usize,
    pub features_per_suite: usize,
    pub prompts: usize,
}

/// Compute expected suite and prompt counts for every stage.
pub fn plan_arithmetic(config: &RunConfig) -> Result<PlanArithmetic, PlanError> {
    let text = config.load_spec_text()?;
    let index = corpus::ingest(&text, &config.heading_pattern()?)?;
    let mut stages = Vec::new();
    let mut total_suites = 0;
    let mut total_prompts = 0;
    for stage in &config.stages {
        let features = config.stage_features(stage, &index)?;
        let suites = stage.llms.len() * stage.methods.len();
        let prompts = suites * features.len();
        stages.push(StageArithmetic {
            name: stage.name.clone(),
            suites,
            features_per_suite: features.len(),
            prompts,
        });
        total_suites += suites;
        total_prompts += prompts;
    }
    Ok(PlanArithmetic {
        stages,
        total_suites,
        total_prompts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    fn error(code: &str, message: String) -> Self {
        Self {
            severity: Severity::Error,
            code: code.to_string(),
            message,
        }
    }

    fn warning(code: &str, message: String) -> Self {
        Self {
            severity: Severity::Warning,
            code: code.to_string(),
            message,
        }
    }
}

/// Check endpoint auth availability, compiler resolvability, asset
/// completeness, and plan references. Returns diagnostics plus the plan
/// arithmetic when the plan is computable.
pub fn validate_config(config: &RunConfig) -> (Vec<Diagnostic>, Option<PlanArithmetic>) {
    let mut diagnostics = Vec::new();

    let spec_path = config.resolve(&config.run.spec_text);
    if !spec_path.is_file() {
        diagnostics.push(Diagnostic::error(
            "SpecMissing",
            format!("spec text not found at {}", spec_path.display()),
        ));
    }

    let assets = crate::prompt::AssetLibrary::load(&config.resolve(&config.run.assets_dir))
        .unwrap_or_default();

    for stage in &config.stages {
        if stage.llms.is_empty() {
            diagnostics.push(Diagnostic::error(
                "EmptyPlan",
                format!("stage '{}' lists no llms", stage.name),
            ));
        }
        if stage.methods.is_empty() {
            diagnostics.push(Diagnostic::error(
                "EmptyPlan",
                format!("stage '{}' lists no methods", stage.name),
            ));
        }
        for llm in &stage.llms {
            match config.endpoints.get(llm) {
                None => diagnostics.push(Diagnostic::error(
                    "UnknownEndpoint",
                    format!("stage '{}' references unknown endpoint '{llm}'", stage.name),
                )),
                Some(endpoint) => {
                    if std::env::var(&endpoint.auth_env_var).is_err() {
                        diagnostics.push(Diagnostic::warning(
                            "AuthUnavailable",
                            format!(
                                "auth variable {} for endpoint '{llm}' is not set",
                                endpoint.auth_env_var
                            ),
                        ));
                    }
                }
            }
        }
        match stage.parsed_languages() {
            Err(e) => diagnostics.push(Diagnostic::error("BadLanguage", e.to_string())),
            Ok(languages) => {
                for &language in &languages {
                    for &method in &stage.methods {
                        if method.uses_template() && !assets.has_template(language) {
                            diagnostics.push(Diagnostic::error(
                                "MissingAsset",
                                format!(
                                    "stage '{}' needs a {language} template for method {method}",
                                    stage.name
                                ),
                            ));
                        }
                        if method.uses_oneshot() && !assets.has_oneshot(language) {
                            diagnostics.push(Diagnostic::error(
                                "MissingAsset",
                                format!(
                                    "stage '{}' needs a {language} one-shot example for method {method}",
                                    stage.name
                                ),
                            ));
                        }
                    }
                }
                match config.stage_profiles(stage) {
                    Err(e) => diagnostics.push(Diagnostic::error("BadProfile", e.to_string())),
                    Ok(profiles) => {
                        for &language in &languages {
                            match profiles.get(&language) {
                                None => diagnostics.push(Diagnostic::error(
                                    "MissingProfile",
                                    format!(
                                        "stage '{}' has no compiler profile for {language}",
                                        stage.name
                                    ),
                                )),
                                Some(profile) => {
                                    if profile.check().is_err() {
                                        diagnostics.push(Diagnostic::error(
                                            "BadProfile",
                                            format!(
                                                "profile for {language} must contain {{src}} and {{out}}"
                                            ),
                                        ));
                                    }
                                    if let Some(executable) = profile.compiler_executable() {
                                        if !executable_on_path(executable) {
                                            diagnostics.push(Diagnostic::warning(
                                                "CompilerNotFound",
                                                format!(
                                                    "compiler '{executable}' for {language} not found on PATH"
                                                ),
                                            ));
                                        }
                                    }
                                    let expected_header = match language {
                                        Language::Fortran => "acc_testsuite.Fh",
                                        _ => "acc_testsuite.h",
                                    };
                                    if !profile.support_headers.contains_key(expected_header) {
                                        diagnostics.push(Diagnostic::warning(
                                            "MissingHeader",
                                            format!(
                                                "profile for {language} does not ship {expected_header}"
                                            ),
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Err(e) = config.permutation_rules_for(stage) {
            diagnostics.push(Diagnostic::error("BadRulesRef", e.to_string()));
        }
    }

    let arithmetic = match plan_arithmetic(config) {
        Ok(arithmetic) => Some(arithmetic),
        Err(e) => {
            diagnostics.push(Diagnostic::error("PlanArithmetic", e.to_string()));
            None
        }
    };
    (diagnostics, arithmetic)
}

fn executable_on_path(name: &str) -> bool {
    if name.contains('/') {
        return Path::new(name).is_file();
    }
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|dir| dir.join(name).is_file()))
        .unwrap_or(false)
}
