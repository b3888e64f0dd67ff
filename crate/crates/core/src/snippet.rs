//! A unit of partial source code with language tag and identity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Languages the chain knows how to judge and repair.
///
/// `JavaLike` covers statically typed snippets that need both import
/// inference and syntax repair; `PythonLike` covers dynamically typed
/// snippets where only syntax repair applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    JavaLike,
    PythonLike,
}

impl Language {
    pub fn as_str(&self) -> &'static str {
        match self {
            Language::JavaLike => "java",
            Language::PythonLike => "python",
        }
    }

    /// Parse from a user-facing name or file extension.
    pub fn parse(s: &str) -> Option<Language> {
        match s.trim().to_ascii_lowercase().as_str() {
            "java" | "javalike" | "java-like" => Some(Language::JavaLike),
            "python" | "py" | "pythonlike" | "python-like" => Some(Language::PythonLike),
            _ => None,
        }
    }
}

impl std::fmt::Display for Language {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum SnippetError {
    #[error("snippet `{0}` has empty source")]
    EmptySource(String),
}

/// A partial code snippet entering the repair chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSnippet {
    pub id: String,
    pub language: Language,
    pub source: String,
    /// Free-text provenance, e.g. the post or file the snippet came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

impl CodeSnippet {
    /// Build a snippet, rejecting whitespace-only source.
    pub fn new(
        id: impl Into<String>,
        language: Language,
        source: impl Into<String>,
    ) -> Result<CodeSnippet, SnippetError> {
        let id = id.into();
        let source = source.into();
        if source.trim().is_empty() {
            return Err(SnippetError::EmptySource(id));
        }
        Ok(CodeSnippet {
            id,
            language,
            source,
            origin: None,
        })
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> CodeSnippet {
        self.origin = Some(origin.into());
        self
    }

    /// The same snippet with replaced source, keeping id and language.
    pub fn with_source(&self, source: impl Into<String>) -> CodeSnippet {
        CodeSnippet {
            id: self.id.clone(),
            language: self.language,
            source: source.into(),
            origin: self.origin.clone(),
        }
    }
}
