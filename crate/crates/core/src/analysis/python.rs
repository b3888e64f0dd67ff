//! Error judgement for Python-language snippets: a syntax-compile check
//! through the platform interpreter.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::toolchain::JudgeError;
use super::{Diagnostic, JudgeReport, WrapLevel};

/// In-interpreter checker: compiles stdin and reports the outcome as one
/// JSON line, so judging never depends on traceback formatting.
const CHECKER: &str = r#"
import json, sys
src = sys.stdin.read()
try:
    compile(src, "<snippet>", "exec")
    print(json.dumps({"ok": True}))
except SyntaxError as e:
    print(json.dumps({"ok": False, "msg": e.msg or "invalid syntax",
                      "lineno": e.lineno, "offset": e.offset}))
"#;

#[derive(Deserialize)]
struct CheckOutcome {
    ok: bool,
    msg: Option<String>,
    lineno: Option<u32>,
    offset: Option<u32>,
}

#[derive(Debug)]
pub struct PythonJudge {
    python_path: PathBuf,
    timeout: Duration,
}

impl PythonJudge {
    pub fn new(python_path: PathBuf, timeout: Duration) -> PythonJudge {
        PythonJudge {
            python_path,
            timeout,
        }
    }

    pub fn available(path: &Path) -> bool {
        Command::new(path)
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false)
    }

    pub fn judge(&self, source: &str) -> Result<JudgeReport, JudgeError> {
        let start = Instant::now();
        let mut cmd = Command::new(&self.python_path);
        cmd.arg("-c")
            .arg(CHECKER)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        let mut child = cmd.spawn().map_err(JudgeError::Io)?;
        {
            use std::io::Write;
            let mut stdin = child.stdin.take().expect("piped stdin");
            stdin
                .write_all(source.as_bytes())
                .map_err(JudgeError::Io)?;
        }
        // Reuse the deadline loop by re-wrapping the running child.
        let output = wait_with_timeout(child, self.timeout)?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        let outcome: CheckOutcome =
            serde_json::from_str(stdout.trim()).map_err(|_| JudgeError::ToolchainMissing {
                language: "python".to_string(),
                detail: format!(
                    "checker produced no verdict (stderr: {})",
                    String::from_utf8_lossy(&output.stderr).trim()
                ),
            })?;
        let diagnostics = if outcome.ok {
            Vec::new()
        } else {
            vec![Diagnostic::classified(
                outcome.msg.unwrap_or_else(|| "invalid syntax".to_string()),
                outcome.lineno,
                outcome.offset,
            )]
        };
        let compiler_exit = i32::from(!diagnostics.is_empty());
        Ok(JudgeReport {
            diagnostics,
            wrap_level_used: WrapLevel::AsIs,
            compiler_exit,
            elapsed_ms: start.elapsed().as_millis() as u64,
        })
    }
}

fn wait_with_timeout(
    mut child: std::process::Child,
    timeout: Duration,
) -> Result<std::process::Output, JudgeError> {
    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait().map_err(JudgeError::Io)? {
            Some(_) => return child.wait_with_output().map_err(JudgeError::Io),
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(JudgeError::CompilerTimeout {
                    seconds: timeout.as_secs(),
                });
            }
            None => std::thread::sleep(Duration::from_millis(10)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Category;

    fn python_or_skip() -> Option<PythonJudge> {
        let path = PathBuf::from("python3");
        if !PythonJudge::available(&path) {
            eprintln!("python3 not found on PATH; skipping interpreter test");
            return None;
        }
        Some(PythonJudge::new(path, Duration::from_secs(30)))
    }

    #[test]
    fn valid_source_is_clean() {
        let Some(judge) = python_or_skip() else { return };
        let report = judge.judge("x = [1, 2]\nprint(sum(x))\n").unwrap();
        assert!(report.is_clean());
        assert_eq!(report.compiler_exit, 0);
    }

    #[test]
    fn unbalanced_paren_is_last_mile_syntax_with_line() {
        let Some(judge) = python_or_skip() else { return };
        let report = judge.judge("print('hi'\n").unwrap();
        assert_eq!(report.diagnostics.len(), 1);
        let d = &report.diagnostics[0];
        assert_eq!(d.category, Category::LastMileSyntax, "{}", d.raw_message);
        assert_eq!(d.line, Some(1));
    }

    #[test]
    fn missing_colon_is_last_mile_syntax() {
        let Some(judge) = python_or_skip() else { return };
        let report = judge.judge("def f(x)\n    return x\n").unwrap();
        assert_eq!(report.diagnostics.len(), 1);
        assert_eq!(report.diagnostics[0].category, Category::LastMileSyntax);
    }

    #[test]
    fn runtime_name_errors_are_not_syntax_problems() {
        let Some(judge) = python_or_skip() else { return };
        // Undefined names are a runtime concern; the compile check passes.
        let report = judge.judge("print(undefined_thing)\n").unwrap();
        assert!(report.is_clean());
    }
}
