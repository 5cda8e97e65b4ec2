//! Prompt assets: one code template and one one-shot example per language.
//!
//! Layout on disk:
//!
//! ```text
//! assets/
//!   templates/<lang>            # manual test with the testing logic removed
//!   oneshot/<lang>/prompt       # example request
//!   oneshot/<lang>/test         # correct manually written test
//!   headers/...                 # support headers used by compiler profiles
//! ```
//!
//! `<lang>` is `c`, `cpp`, or `fortran`.

use std::collections::BTreeMap;
use std::path::Path;

use super::PromptError;
use crate::lang::Language;
use crate::util::short_digest;

#[derive(Debug, Clone)]
pub struct TemplateAsset {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct OneShotExample {
    pub id: String,
    pub prompt: String,
    pub test: String,
}

#[derive(Debug, Clone, Default)]
pub struct AssetLibrary {
    templates: BTreeMap<Language, TemplateAsset>,
    oneshot: BTreeMap<Language, OneShotExample>,
}

impl AssetLibrary {
    /// Load whatever assets exist under `dir`. Missing assets only become
    /// errors when a prompt method needs them.
    pub fn load(dir: &Path) -> std::io::Result<Self> {
        let mut lib = AssetLibrary::default();
        for language in Language::ALL {
            let key = language.asset_key();
            let template_path = dir.join("templates").join(key);
            if template_path.is_file() {
                lib.set_template(language, std::fs::read_to_string(&template_path)?);
            }
            let prompt_path = dir.join("oneshot").join(key).join("prompt");
            let test_path = dir.join("oneshot").join(key).join("test");
            if prompt_path.is_file() && test_path.is_file() {
                lib.set_oneshot(
                    language,
                    std::fs::read_to_string(&prompt_path)?,
                    std::fs::read_to_string(&test_path)?,
                );
            }
        }
        Ok(lib)
    }

    pub fn set_template(&mut self, language: Language, text: String) {
        let id = short_digest(text.as_bytes());
        self.templates.insert(language, TemplateAsset { id, text });
    }

    pub fn set_oneshot(&mut self, language: Language, prompt: String, test: String) {
        let id = short_digest(format!("{prompt}\u{0}{test}").as_bytes());
        self.oneshot
            .insert(language, OneShotExample { id, prompt, test });
    }

    pub fn template(&self, language: Language) -> Result<&TemplateAsset, PromptError> {
        self.templates
            .get(&language)
            .ok_or(PromptError::MissingAsset {
                language,
                kind: "template",
            })
    }

    pub fn oneshot(&self, language: Language) -> Result<&OneShotExample, PromptError> {
        self.oneshot
            .get(&language)
            .ok_or(PromptError::MissingAsset {
                language,
                kind: "oneshot",
            })
    }

    pub fn has_template(&self, language: Language) -> bool {
        self.templates.contains_key(&language)
    }

    pub fn has_oneshot(&self, language: Language) -> bool {
        self.oneshot.contains_key(&language)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_partial_asset_trees() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("templates")).unwrap();
        std::fs::write(dir.path().join("templates/c"), "tpl").unwrap();
        std::fs::create_dir_all(dir.path().join("oneshot/c")).unwrap();
        std::fs::write(dir.path().join("oneshot/c/prompt"), "p").unwrap();
        std::fs::write(dir.path().join("oneshot/c/test"), "t").unwrap();

        let lib = AssetLibrary::load(dir.path()).unwrap();
        assert!(lib.has_template(Language::C));
        assert!(lib.has_oneshot(Language::C));
        assert!(!lib.has_template(Language::Fortran));
        assert!(matches!(
            lib.template(Language::Fortran),
            Err(PromptError::MissingAsset {
                kind: "template",
                ..
            })
        ));
        assert_eq!(lib.template(Language::C).unwrap().text, "tpl");
    }
}
