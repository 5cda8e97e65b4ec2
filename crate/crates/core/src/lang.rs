//! Base languages a generated test can be written in.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Base language of a validation test. The set is closed: these are the
/// languages the directive specification applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "C")]
    C,
    #[serde(rename = "C++")]
    Cpp,
    #[serde(rename = "Fortran")]
    Fortran,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::C, Language::Cpp, Language::Fortran];

    /// File extension used when writing an extracted test to disk.
    pub fn extension(self) -> &'static str {
        match self {
            Language::C => "c",
            Language::Cpp => "cpp",
            Language::Fortran => "F90",
        }
    }

    /// Directory key used in the assets tree (`assets/templates/<key>`).
    pub fn asset_key(self) -> &'static str {
        match self {
            Language::C => "c",
            Language::Cpp => "cpp",
            Language::Fortran => "fortran",
        }
    }

    /// Detect the language of a test file from its extension, if any.
    pub fn from_path(path: &Path) -> Option<Language> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "c" => Some(Language::C),
            "cpp" | "cxx" | "cc" => Some(Language::Cpp),
            "f" | "f90" | "f95" | "f03" | "f08" | "for" => Some(Language::Fortran),
            _ => None,
        }
    }

    /// Parse a config-file spelling ("c", "cpp", "c++", "fortran", ...).
    pub fn parse_key(s: &str) -> Option<Language> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Some(Language::C),
            "cpp" | "c++" | "cxx" => Some(Language::Cpp),
            "fortran" | "f90" | "f" => Some(Language::Fortran),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Language::C => "C",
            Language::Cpp => "C++",
            Language::Fortran => "Fortran",
        };
        f.write_str(name)
    }
}
