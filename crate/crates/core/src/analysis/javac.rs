//! Error judgement through the platform `javac`.
//!
//! Each judgement compiles the snippet in a fresh temporary directory,
//! escalating through the wrap levels until the wrapper-induced
//! structural errors disappear, and maps diagnostic line numbers back to
//! snippet coordinates.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::toolchain::JudgeError;
use super::wrap::{has_structural_wrap_error, wrap_java, WrappedJava};
use super::{Diagnostic, JudgeReport, WrapLevel};

#[derive(Debug)]
pub struct JavacJudge {
    javac_path: PathBuf,
    classpath: Option<String>,
    timeout: Duration,
    workspace_root: Option<PathBuf>,
}

impl JavacJudge {
    pub fn new(
        javac_path: PathBuf,
        classpath: Option<String>,
        timeout: Duration,
        workspace_root: Option<PathBuf>,
    ) -> JavacJudge {
        JavacJudge {
            javac_path,
            classpath,
            timeout,
            workspace_root,
        }
    }

    /// True when `javac -version` runs successfully at `path`.
    pub fn available(path: &Path) -> bool {
        Command::new(path)
            .arg("-version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false)
    }

    pub fn judge(&self, source: &str) -> Result<JudgeReport, JudgeError> {
        let start = Instant::now();
        let mut fallback: Option<JudgeReport> = None;
        for level in WrapLevel::ESCALATION {
            let wrapped = wrap_java(source, level);
            let report = self.compile_once(&wrapped, start)?;
            if !has_structural_wrap_error(&report.diagnostics) {
                return Ok(report);
            }
            // All levels still structurally broken: keep the report with
            // the fewest diagnostics as the most informative one.
            let better = fallback
                .as_ref()
                .map(|f| report.diagnostics.len() < f.diagnostics.len())
                .unwrap_or(true);
            if better {
                fallback = Some(report);
            }
        }
        Ok(fallback.expect("escalation tried at least one level"))
    }

    fn compile_once(
        &self,
        wrapped: &WrappedJava,
        start: Instant,
    ) -> Result<JudgeReport, JudgeError> {
        let dir = match &self.workspace_root {
            Some(root) => {
                std::fs::create_dir_all(root).map_err(JudgeError::Io)?;
                tempfile::tempdir_in(root)
            }
            None => tempfile::tempdir(),
        }
        .map_err(JudgeError::Io)?;
        let file_name = format!("{}.java", public_class_name(&wrapped.text));
        let source_path = dir.path().join(&file_name);
        std::fs::write(&source_path, &wrapped.text).map_err(JudgeError::Io)?;

        let mut cmd = Command::new(&self.javac_path);
        cmd.arg("-d")
            .arg(dir.path().join("out"))
            .current_dir(dir.path())
            .stdout(Stdio::null())
            .stderr(Stdio::piped());
        if let Some(cp) = &self.classpath {
            cmd.arg("-cp").arg(cp);
        }
        cmd.arg(&file_name);

        let output = run_with_timeout(cmd, self.timeout)?;
        let stderr = String::from_utf8_lossy(&output.stderr);
        let mut diagnostics = parse_javac_stderr(&stderr, &file_name);
        let exit = output.status.code().unwrap_or(-1);
        if diagnostics.is_empty() && exit != 0 {
            // Unparseable failure (bad flags, crashed compiler): surface
            // the raw output rather than pretending the snippet is clean.
            diagnostics.push(Diagnostic::classified(
                stderr.trim().to_string(),
                None,
                None,
            ));
        }
        wrapped.map_diagnostics(&mut diagnostics);
        Ok(JudgeReport {
            diagnostics,
            wrap_level_used: wrapped.level,
            compiler_exit: exit,
            elapsed_ms: start.elapsed().as_millis() as u64,
        })
    }
}

/// File name javac demands: a declared public type's name, else anything.
fn public_class_name(source: &str) -> String {
    for line in source.lines() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("public ") {
            for keyword in ["class ", "interface ", "enum ", "record "] {
                if let Some(after) = rest
                    .trim_start_matches("final ")
                    .trim_start_matches("abstract ")
                    .strip_prefix(keyword)
                {
                    let name: String = after
                        .chars()
                        .take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '$')
                        .collect();
                    if !name.is_empty() {
                        return name;
                    }
                }
            }
        }
    }
    "Snippet".to_string()
}

/// Run a prepared command, killing it when the deadline passes.
pub(super) fn run_with_timeout(
    mut cmd: Command,
    timeout: Duration,
) -> Result<std::process::Output, JudgeError> {
    let mut child = cmd.spawn().map_err(JudgeError::Io)?;
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

/// Parse `file:line: error: message` blocks from javac's stderr, folding
/// the indented `symbol:`/`location:` context lines into the message and
/// the caret line into a column.
fn parse_javac_stderr(stderr: &str, file_name: &str) -> Vec<Diagnostic> {
    let prefix = format!("{file_name}:");
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    for line in stderr.lines() {
        if let Some(rest) = line.strip_prefix(&prefix) {
            let Some((line_no, after)) = rest.split_once(':') else {
                continue;
            };
            let Ok(line_no) = line_no.trim().parse::<u32>() else {
                continue;
            };
            let after = after.trim_start();
            if let Some(message) = after.strip_prefix("error:") {
                diagnostics.push(Diagnostic::classified(
                    message.trim().to_string(),
                    Some(line_no),
                    None,
                ));
            }
            // warnings and notes are ignored
        } else if let Some(last) = diagnostics.last_mut() {
            let trimmed = line.trim();
            if trimmed == "^" {
                if last.column.is_none() {
                    last.column = Some(line.find('^').unwrap_or(0) as u32 + 1);
                }
            } else if let Some(sym) = trimmed.strip_prefix("symbol:") {
                last.raw_message = format!("{}: {}", last.raw_message, sym.trim());
            }
            // source-echo and location lines are dropped
        }
    }
    diagnostics
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_STDERR: &str = "\
Snippet.java:4: error: ';' expected
        int x = 1
                 ^
Snippet.java:6: error: cannot find symbol
        StringUtils.upperCase(s);
        ^
  symbol:   variable StringUtils
  location: class PcrSnippetShell
2 errors
";

    #[test]
    fn stderr_blocks_parse_into_located_diagnostics() {
        let diags = parse_javac_stderr(SAMPLE_STDERR, "Snippet.java");
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].raw_message, "';' expected");
        assert_eq!(diags[0].line, Some(4));
        assert_eq!(diags[0].column, Some(18));
        assert_eq!(diags[1].raw_message, "cannot find symbol: variable StringUtils");
        assert_eq!(diags[1].line, Some(6));
        assert_eq!(diags[1].category, super::super::Category::NonFqn);
    }

    #[test]
    fn public_class_names_drive_the_file_name() {
        assert_eq!(public_class_name("public class Foo {}"), "Foo");
        assert_eq!(
            public_class_name("package a;\npublic final class Bar {}"),
            "Bar"
        );
        assert_eq!(public_class_name("class Private {}"), "Snippet");
    }

    fn javac_or_skip() -> Option<JavacJudge> {
        let path = PathBuf::from("javac");
        if !JavacJudge::available(&path) {
            eprintln!("javac not found on PATH; skipping live compiler test");
            return None;
        }
        Some(JavacJudge::new(path, None, Duration::from_secs(30), None))
    }

    #[test]
    fn valid_compilation_unit_is_clean_as_is() {
        let Some(judge) = javac_or_skip() else { return };
        let report = judge
            .judge("class Ok { static int one() { return 1; } }")
            .unwrap();
        assert!(report.is_clean(), "{:?}", report.diagnostics);
        assert_eq!(report.wrap_level_used, WrapLevel::AsIs);
    }

    #[test]
    fn bare_statements_escalate_to_method_body() {
        let Some(judge) = javac_or_skip() else { return };
        let report = judge.judge("int x = 1\nint y = 2;").unwrap();
        assert_eq!(report.wrap_level_used, WrapLevel::MethodBody);
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.raw_message.contains("expected") && d.line == Some(1)));
    }
}
