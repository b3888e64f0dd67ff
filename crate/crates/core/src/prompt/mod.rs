//! Prompt templates, deterministic rendering and response parsing for the
//! four AI units, plus the single-prompt direct and chain-of-thought
//! renderings used by the ablation variants.

mod parse;
mod render;
mod similarity;
mod template;

pub use parse::{parse_fixed_code, parse_fqn_mappings, parse_simple_names, FixedCodeError, FqnParse};
pub use render::{render_cot_prompt, render_direct_prompt, render_prompt, RenderError};
pub use similarity::{cosine_similarity, order_examples};
pub use template::{TemplateError, UnitLibrary};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The four prompt-based AI units of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnitName {
    SimplenameExtraction,
    SimplenameToFqn,
    ErrorMessageEnhance,
    CodeFix,
}

impl UnitName {
    pub const ALL: [UnitName; 4] = [
        UnitName::SimplenameExtraction,
        UnitName::SimplenameToFqn,
        UnitName::ErrorMessageEnhance,
        UnitName::CodeFix,
    ];

    /// Kebab-case identifier used for CLI arguments and template files.
    pub fn slug(&self) -> &'static str {
        match self {
            UnitName::SimplenameExtraction => "simplename-extraction",
            UnitName::SimplenameToFqn => "simplename-to-fqn",
            UnitName::ErrorMessageEnhance => "error-message-enhance",
            UnitName::CodeFix => "code-fix",
        }
    }

    /// Human-readable unit name as it appears in traces.
    pub fn display_name(&self) -> &'static str {
        match self {
            UnitName::SimplenameExtraction => "Simplename Extraction",
            UnitName::SimplenameToFqn => "Simplename to FQN",
            UnitName::ErrorMessageEnhance => "Error Message Enhance",
            UnitName::CodeFix => "Code Fix",
        }
    }

    pub fn parse(s: &str) -> Option<UnitName> {
        UnitName::ALL.iter().copied().find(|u| u.slug() == s)
    }
}

impl std::fmt::Display for UnitName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.display_name())
    }
}

/// What a rendered prompt drives: one of the four AI units, or one of the
/// single-prompt repair strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    Unit(UnitName),
    Direct,
    CoT,
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PromptKind::Unit(u) => f.write_str(u.display_name()),
            PromptKind::Direct => f.write_str("Direct Repair"),
            PromptKind::CoT => f.write_str("CoT Repair"),
        }
    }
}

/// One in-context input/output demonstration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub input: String,
    pub output: String,
}

/// An input field a unit template expects, with the label used when the
/// rendered input block carries more than one field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub key: String,
    pub label: String,
}

/// A unit's prompt template: task description, exactly five demonstration
/// examples and the schema of the input placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub name: UnitName,
    pub task_description: String,
    pub examples: Vec<Example>,
    pub fields: Vec<FieldSpec>,
}

pub const EXAMPLES_PER_UNIT: usize = 5;

/// How demonstration examples are ordered relative to the prompt's input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleOrder {
    /// Template order.
    #[default]
    Fixed,
    /// Most similar example first, i.e. farthest from the input block.
    SimilarFirst,
    /// Most similar example last, i.e. adjacent to the input block.
    DissimilarFirst,
}

/// Prompt content layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    #[default]
    NaturalLanguage,
    /// XML-like open/close tags around the task description, each example
    /// and the input section.
    SemiStructured,
}

/// The prompt-form factors varied by the sensitivity sweep. The default is
/// the basic configuration: task description present, fixed example order,
/// natural language layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptStyle {
    #[serde(default = "default_include_task_description")]
    pub include_task_description: bool,
    #[serde(default)]
    pub example_order: ExampleOrder,
    #[serde(default)]
    pub representation: Representation,
}

fn default_include_task_description() -> bool {
    true
}

impl Default for PromptStyle {
    fn default() -> PromptStyle {
        PromptStyle {
            include_task_description: true,
            example_order: ExampleOrder::Fixed,
            representation: Representation::NaturalLanguage,
        }
    }
}

impl PromptStyle {
    /// Number of factors in which two styles differ.
    pub fn factor_distance(&self, other: &PromptStyle) -> usize {
        let mut n = 0;
        if self.include_task_description != other.include_task_description {
            n += 1;
        }
        if self.example_order != other.example_order {
            n += 1;
        }
        if self.representation != other.representation {
            n += 1;
        }
        n
    }
}

/// A fully rendered prompt with a stable digest of its text, used as the
/// cache and replay key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub kind: PromptKind,
    pub text: String,
    pub content_hash: String,
}

impl RenderedPrompt {
    pub fn new(kind: PromptKind, text: String) -> RenderedPrompt {
        let content_hash = content_hash(&text);
        RenderedPrompt {
            kind,
            text,
            content_hash,
        }
    }
}

/// Hex SHA-256 of the prompt text.
pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Association of a simple name with its inferred fully qualified name.
///
/// A mapping is `suspect` when the FQN does not end in `"." + simple_name`
/// (case sensitive); suspect mappings are kept for observability but never
/// applied to code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FqnMapping {
    pub simple_name: String,
    pub fqn: String,
    pub suspect: bool,
}

impl FqnMapping {
    pub fn new(simple_name: impl Into<String>, fqn: impl Into<String>) -> FqnMapping {
        let simple_name = simple_name.into();
        let fqn = fqn.into();
        let suspect = !fqn.ends_with(&format!(".{simple_name}"));
        FqnMapping {
            simple_name,
            fqn,
            suspect,
        }
    }
}

/// Plain-language explanation of a compiler error plus a fix suggestion,
/// produced by the Error Message Enhance unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorExplanation {
    pub text: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_hash_is_pure_function_of_text() {
        let a = RenderedPrompt::new(PromptKind::Direct, "hello".into());
        let b = RenderedPrompt::new(PromptKind::CoT, "hello".into());
        assert_eq!(a.content_hash, b.content_hash);
        let c = RenderedPrompt::new(PromptKind::Direct, "hello!".into());
        assert_ne!(a.content_hash, c.content_hash);
    }

    #[test]
    fn suffix_rule_flags_suspect_mappings() {
        let ok = FqnMapping::new("StringUtils", "org.apache.commons.lang3.StringUtils");
        assert!(!ok.suspect);
        let bad = FqnMapping::new("StringUtils", "org.apache.commons.lang3.Strings");
        assert!(bad.suspect);
        // Case-sensitive comparison, and a bare name has no dot prefix.
        assert!(FqnMapping::new("List", "java.util.list").suspect);
        assert!(FqnMapping::new("List", "List").suspect);
    }

    #[test]
    fn default_style_is_basic_configuration() {
        let s = PromptStyle::default();
        assert!(s.include_task_description);
        assert_eq!(s.example_order, ExampleOrder::Fixed);
        assert_eq!(s.representation, Representation::NaturalLanguage);
    }
}
