//! Compiler selection and dispatch.
//!
//! One [`Toolchain`] serves both snippet languages. The Java judge is
//! pluggable: `javac` when installed (or demanded), otherwise the bundled
//! parser-based checker, so judgement works on machines without a JDK.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snippet::{CodeSnippet, Language};

use super::builtin::{BuiltinJavaJudge, ClasspathIndex};
use super::javac::JavacJudge;
use super::python::PythonJudge;
use super::JudgeReport;

/// Which implementation judges Java-language snippets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JavaJudgeKind {
    /// `javac` when available, else the bundled checker.
    #[default]
    Auto,
    /// Require `javac`; constructing the toolchain fails without it.
    Javac,
    /// Always the bundled checker.
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilerConfig {
    #[serde(default)]
    pub java: JavaJudgeKind,
    /// Defaults to `javac` on PATH.
    #[serde(default)]
    pub javac_path: Option<PathBuf>,
    /// Defaults to `python3` on PATH.
    #[serde(default)]
    pub python_path: Option<PathBuf>,
    /// Directory of jars handed to `javac -cp` as `dir/*`.
    #[serde(default)]
    pub classpath_dir: Option<PathBuf>,
    /// Fully-qualified-name list for the bundled checker; defaults to the
    /// embedded index.
    #[serde(default)]
    pub classpath_index: Option<PathBuf>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Where per-invocation temp directories are created.
    #[serde(default)]
    pub workspace_root: Option<PathBuf>,
}

fn default_timeout_secs() -> u64 {
    30
}

impl Default for CompilerConfig {
    fn default() -> CompilerConfig {
        CompilerConfig {
            java: JavaJudgeKind::Auto,
            javac_path: None,
            python_path: None,
            classpath_dir: None,
            classpath_index: None,
            timeout_secs: 30,
            workspace_root: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("no {language} toolchain: {detail}")]
    ToolchainMissing { language: String, detail: String },
    #[error("compiler exceeded the {seconds}s timeout")]
    CompilerTimeout { seconds: u64 },
    #[error("compiler invocation failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
enum JavaJudgeImpl {
    Javac(JavacJudge),
    Builtin(BuiltinJavaJudge),
}

#[derive(Debug)]
pub struct Toolchain {
    java: JavaJudgeImpl,
    python: Option<PythonJudge>,
}

impl Toolchain {
    pub fn from_config(config: &CompilerConfig) -> Result<Toolchain, JudgeError> {
        let javac_path = config
            .javac_path
            .clone()
            .unwrap_or_else(|| PathBuf::from("javac"));
        let timeout = Duration::from_secs(config.timeout_secs.max(1));
        let classpath = config
            .classpath_dir
            .as_ref()
            .map(|dir| format!("{}/*", dir.display()));
        let make_javac = || {
            JavacJudge::new(
                javac_path.clone(),
                classpath.clone(),
                timeout,
                config.workspace_root.clone(),
            )
        };
        let make_builtin = || -> Result<BuiltinJavaJudge, JudgeError> {
            let index = match &config.classpath_index {
                Some(path) => ClasspathIndex::load(path)?,
                None => ClasspathIndex::builtin().clone(),
            };
            Ok(BuiltinJavaJudge::new(index))
        };
        let java = match config.java {
            JavaJudgeKind::Javac => {
                if !JavacJudge::available(&javac_path) {
                    return Err(JudgeError::ToolchainMissing {
                        language: "java".to_string(),
                        detail: format!("javac not runnable at {}", javac_path.display()),
                    });
                }
                JavaJudgeImpl::Javac(make_javac())
            }
            JavaJudgeKind::Auto => {
                if JavacJudge::available(&javac_path) {
                    JavaJudgeImpl::Javac(make_javac())
                } else {
                    JavaJudgeImpl::Builtin(make_builtin()?)
                }
            }
            JavaJudgeKind::Builtin => JavaJudgeImpl::Builtin(make_builtin()?),
        };
        let python_path = config
            .python_path
            .clone()
            .unwrap_or_else(|| PathBuf::from("python3"));
        let python =
            PythonJudge::available(&python_path).then(|| PythonJudge::new(python_path, timeout));
        Ok(Toolchain { java, python })
    }

    /// Name of the active Java judge, for run logs and reports.
    pub fn java_judge_name(&self) -> &'static str {
        match self.java {
            JavaJudgeImpl::Javac(_) => "javac",
            JavaJudgeImpl::Builtin(_) => "builtin",
        }
    }

    pub fn judge(&self, snippet: &CodeSnippet) -> Result<JudgeReport, JudgeError> {
        match snippet.language {
            Language::JavaLike => match &self.java {
                JavaJudgeImpl::Javac(judge) => judge.judge(&snippet.source),
                JavaJudgeImpl::Builtin(judge) => judge.judge(&snippet.source),
            },
            Language::PythonLike => match &self.python {
                Some(judge) => judge.judge(&snippet.source),
                None => Err(JudgeError::ToolchainMissing {
                    language: "python".to_string(),
                    detail: "python3 not runnable".to_string(),
                }),
            },
        }
    }

    /// Judge raw source in the given language.
    pub fn judge_source(&self, language: Language, source: &str) -> Result<JudgeReport, JudgeError> {
        let snippet = CodeSnippet::new("adhoc", language, source)
            .map_err(|e| JudgeError::ToolchainMissing {
                language: language.as_str().to_string(),
                detail: e.to_string(),
            })?;
        self.judge(&snippet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Category;

    #[test]
    fn auto_config_always_yields_a_java_judge() {
        let toolchain = Toolchain::from_config(&CompilerConfig::default()).unwrap();
        assert!(matches!(toolchain.java_judge_name(), "javac" | "builtin"));
        let report = toolchain
            .judge_source(Language::JavaLike, "int x = 1\n")
            .unwrap();
        assert!(report.count(Category::LastMileSyntax) >= 1, "{report:#?}");
    }

    #[test]
    fn python_judging_dispatches_by_language() {
        let toolchain = Toolchain::from_config(&CompilerConfig::default()).unwrap();
        let report = match toolchain.judge_source(Language::PythonLike, "print('hi'\n") {
            Ok(r) => r,
            Err(JudgeError::ToolchainMissing { .. }) => {
                eprintln!("python3 not found; skipping");
                return;
            }
            Err(e) => panic!("{e}"),
        };
        assert_eq!(report.count(Category::LastMileSyntax), 1);
    }

    #[test]
    fn demanding_javac_without_one_fails_loudly() {
        let config = CompilerConfig {
            java: JavaJudgeKind::Javac,
            javac_path: Some(PathBuf::from("/nonexistent/javac")),
            ..CompilerConfig::default()
        };
        let err = Toolchain::from_config(&config).unwrap_err();
        assert!(matches!(err, JudgeError::ToolchainMissing { .. }));
    }

    #[test]
    fn builtin_kind_never_needs_a_jdk() {
        let config = CompilerConfig {
            java: JavaJudgeKind::Builtin,
            ..CompilerConfig::default()
        };
        let toolchain = Toolchain::from_config(&config).unwrap();
        assert_eq!(toolchain.java_judge_name(), "builtin");
        let report = toolchain
            .judge_source(Language::JavaLike, "class Ok { int x; }\n")
            .unwrap();
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
    }
}
