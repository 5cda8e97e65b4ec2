//! Feature enumeration from the spec ToC and compute-construct permutation.

use serde::{Deserialize, Serialize};

use super::{FeatureSpec, PromptError};
use crate::corpus::SpecIndex;
use crate::lang::Language;

/// Key-based include/exclude filter applied during enumeration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeatureFilter {
    /// Keys to drop.
    #[serde(default)]
    pub exclude_keys: Vec<String>,
    /// When non-empty, only these keys are kept.
    #[serde(default)]
    pub include_keys: Vec<String>,
}

impl FeatureFilter {
    fn admits(&self, key: &str) -> bool {
        if self.exclude_keys.iter().any(|k| k == key) {
            return false;
        }
        self.include_keys.is_empty() || self.include_keys.iter().any(|k| k == key)
    }
}

/// Replace features in matching sections with one feature per construct
/// variant. A feature matches when its section key starts with `key_prefix`
/// and is not listed in `exclude_keys`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermutationRule {
    pub key_prefix: String,
    /// Substring of the feature name replaced by each variant. When the name
    /// does not contain it, the variant is prefixed instead.
    pub construct_token: String,
    pub variants: Vec<String>,
    #[serde(default)]
    pub exclude_keys: Vec<String>,
}

impl PermutationRule {
    fn matches(&self, feature: &FeatureSpec) -> bool {
        feature.section_key.starts_with(&self.key_prefix)
            && !self.exclude_keys.contains(&feature.section_key)
    }
}

/// One feature per included leaf ToC entry per language, in document order
/// (languages outer, entries inner). A leaf entry is one no other key
/// extends. Feature names are the lowercased section titles; entries whose
/// title names a clause are prefixed with their parent section's title.
pub fn enumerate_features(
    index: &SpecIndex,
    chapters: &[u32],
    languages: &[Language],
    filter: &FeatureFilter,
) -> Result<Vec<FeatureSpec>, PromptError> {
    let keys: Vec<&str> = index.keys().collect();
    let is_leaf = |key: &str| {
        let prefix = format!("{key}.");
        !keys.iter().any(|k| k.starts_with(&prefix))
    };

    let mut features = Vec::new();
    for &language in languages {
        for section in index.sections() {
            let chapter: u32 = match section.key.split('.').next().and_then(|s| s.parse().ok()) {
                Some(c) => c,
                None => continue,
            };
            if !chapters.contains(&chapter)
                || !is_leaf(&section.key)
                || !filter.admits(&section.key)
            {
                continue;
            }
            features.push(FeatureSpec {
                name: feature_name(index, &section.key, &section.title),
                section_key: section.key.clone(),
                base_language: language,
                permutation_of: None,
            });
        }
    }
    if features.is_empty() {
        return Err(PromptError::EmptySelection);
    }
    Ok(features)
}

/// Display name for a feature: the lowercased section title, with the parent
/// section's title prefixed for clause entries.
pub(crate) fn feature_name(index: &SpecIndex, key: &str, title: &str) -> String {
    let lowered = title.to_lowercase();
    if lowered.contains("clause") {
        if let Some(pos) = key.rfind('.') {
            if let Some(parent) = index.get(&key[..pos]) {
                let parent_title = parent.title.to_lowercase();
                if !parent_title.is_empty() {
                    return format!("{parent_title} {lowered}");
                }
            }
        }
    }
    lowered
}

/// Expand features through the first matching rule. Matched features are
/// replaced by one feature per variant, with the variant substituted into the
/// feature name and `permutation_of` set; unmatched features pass through.
pub fn expand_permutations(
    features: Vec<FeatureSpec>,
    rules: &[PermutationRule],
) -> Vec<FeatureSpec> {
    let mut out = Vec::with_capacity(features.len());
    for feature in features {
        match rules.iter().find(|r| r.matches(&feature)) {
            None => out.push(feature),
            Some(rule) => {
                for variant in &rule.variants {
                    let name = if feature.name.contains(&rule.construct_token) {
                        feature.name.replace(&rule.construct_token, variant)
                    } else {
                        format!("{variant} {}", feature.name)
                    };
                    out.push(FeatureSpec {
                        name,
                        section_key: feature.section_key.clone(),
                        base_language: feature.base_language,
                        permutation_of: Some(variant.clone()),
                    });
                }
            }
        }
    }
    out
}
