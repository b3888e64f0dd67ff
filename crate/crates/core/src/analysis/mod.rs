//! The non-AI units: compiler-based error judgement with snippet
//! wrapping, diagnostic classification, and import supplementation.
//!
//! Judging shells out to the language's real toolchain when one is
//! installed (`javac`, `python3`). For Java-language snippets a bundled
//! parser-based checker is also provided so hermetic environments without
//! a JDK can still judge code; see [`toolchain`] selection rules.

mod builtin;
mod javac;
mod python;
mod rules;
mod supplement;
mod toolchain;
mod wrap;

use serde::{Deserialize, Serialize};

pub use builtin::{BuiltinJavaJudge, ClasspathIndex};
pub use javac::JavacJudge;
pub use python::PythonJudge;
pub use rules::{classify_diagnostic, RuleTable};
pub use supplement::supplement_fqns;
pub use toolchain::{CompilerConfig, JavaJudgeKind, JudgeError, Toolchain};
pub use wrap::{wrap_java, WrappedJava};

/// What kind of problem a compiler message describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    /// Unresolved simple names and missing packages: the import side.
    NonFqn,
    /// Small token-level slips: missing separators, unbalanced brackets.
    LastMileSyntax,
    /// Anything else (type errors, semantics); tracked but outside both
    /// repair metrics.
    Other,
}

/// One parsed compiler message, located in original snippet coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub raw_message: String,
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub category: Category,
}

impl Diagnostic {
    /// Build a diagnostic, classifying the message with the default rule
    /// table.
    pub fn classified(
        raw_message: impl Into<String>,
        line: Option<u32>,
        column: Option<u32>,
    ) -> Diagnostic {
        let raw_message = raw_message.into();
        let category = classify_diagnostic(&raw_message);
        Diagnostic {
            raw_message,
            line,
            column,
            category,
        }
    }
}

/// How much scaffolding was added around the snippet before compiling.
/// Escalation tries `AsIs` first, then `ClassBody`, then `MethodBody`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WrapLevel {
    /// The snippet already forms a compilation unit.
    AsIs,
    /// Members (methods, fields) wrapped in a class shell.
    ClassBody,
    /// Free-standing statements wrapped in a method inside a class shell.
    MethodBody,
}

impl WrapLevel {
    pub const ESCALATION: [WrapLevel; 3] =
        [WrapLevel::AsIs, WrapLevel::ClassBody, WrapLevel::MethodBody];
}

/// The outcome of judging one snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub diagnostics: Vec<Diagnostic>,
    pub wrap_level_used: WrapLevel,
    pub compiler_exit: i32,
    pub elapsed_ms: u64,
}

impl JudgeReport {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn count(&self, category: Category) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.category == category)
            .count()
    }
}

/// Per-category freedom of a judge report, the basis of every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionStatus {
    pub non_fqn_free: bool,
    pub syntax_free: bool,
}

/// A report is free of a category iff it contains no diagnostic of that
/// category; the two categories are independent, and `Other` affects
/// neither.
pub fn resolution_status(report: &JudgeReport) -> ResolutionStatus {
    ResolutionStatus {
        non_fqn_free: report.count(Category::NonFqn) == 0,
        syntax_free: report.count(Category::LastMileSyntax) == 0,
    }
}
