//! Snippet wrapping for Java-language compilation.
//!
//! Partial code usually lacks the enclosing class or method the compiler
//! demands. Wrapping adds the smallest shell that could make the snippet
//! a compilation unit, keeping any leading package/import/comment lines
//! outside the shell, and remembers the added line offsets so diagnostics
//! can be mapped back to original snippet coordinates.

use super::{Diagnostic, WrapLevel};

const CLASS_SHELL: &str = "class PcrSnippetShell {";
const METHOD_SHELL: &str = "static void pcrSnippetShell() throws Exception {";

/// A snippet prepared for compilation at one wrap level.
#[derive(Debug, Clone)]
pub struct WrappedJava {
    pub text: String,
    pub level: WrapLevel,
    /// Lines of the original snippet kept above the shell.
    prefix_lines: u32,
    /// Shell lines inserted between prefix and body.
    header_lines: u32,
    original_lines: u32,
}

/// Wrap `source` at the requested level.
pub fn wrap_java(source: &str, level: WrapLevel) -> WrappedJava {
    let lines: Vec<&str> = source.lines().collect();
    let original_lines = lines.len() as u32;
    if level == WrapLevel::AsIs {
        return WrappedJava {
            text: source.to_string(),
            level,
            prefix_lines: 0,
            header_lines: 0,
            original_lines,
        };
    }
    let prefix_len = leading_header_len(&lines);
    let headers: &[&str] = match level {
        WrapLevel::AsIs => unreachable!(),
        WrapLevel::ClassBody => &[CLASS_SHELL],
        WrapLevel::MethodBody => &[CLASS_SHELL, METHOD_SHELL],
    };
    let mut out: Vec<&str> = Vec::with_capacity(lines.len() + headers.len() * 2);
    out.extend_from_slice(&lines[..prefix_len]);
    out.extend_from_slice(headers);
    out.extend_from_slice(&lines[prefix_len..]);
    out.extend(std::iter::repeat_n("}", headers.len()));
    WrappedJava {
        text: format!("{}\n", out.join("\n")),
        level,
        prefix_lines: prefix_len as u32,
        header_lines: headers.len() as u32,
        original_lines,
    }
}

impl WrappedJava {
    /// Map a 1-based line number in the wrapped text back to the original
    /// snippet. Diagnostics on shell lines are clamped to the nearest
    /// original line.
    pub fn map_line(&self, wrapped_line: u32) -> u32 {
        if self.original_lines == 0 {
            return 1;
        }
        let mapped = if wrapped_line <= self.prefix_lines {
            wrapped_line
        } else {
            wrapped_line.saturating_sub(self.header_lines)
        };
        mapped.clamp(1, self.original_lines)
    }

    /// Apply [`WrappedJava::map_line`] to every diagnostic.
    pub fn map_diagnostics(&self, diagnostics: &mut [Diagnostic]) {
        for d in diagnostics {
            if let Some(line) = d.line {
                d.line = Some(self.map_line(line));
            }
        }
    }
}

/// Length of the leading run of lines allowed outside a class shell:
/// package and import declarations, blanks, and line comments.
fn leading_header_len(lines: &[&str]) -> usize {
    lines
        .iter()
        .take_while(|line| {
            let t = line.trim_start();
            t.is_empty()
                || t.starts_with("package ")
                || t.starts_with("import ")
                || t.starts_with("//")
        })
        .count()
}

/// Wording javac emits when top-level content is not a type declaration —
/// the signal that the current wrap level is too shallow, not that the
/// snippet itself is broken.
pub(super) fn has_structural_wrap_error(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| {
        let m = d.raw_message.as_str();
        m.contains("class, interface, or enum expected")
            || m.contains("class, interface, enum, or record expected")
            || m.contains("reached end of file while parsing")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STATEMENTS: &str = "import java.util.List;\n\nList<String> names = null;\nnames.add(\"x\");\n";

    #[test]
    fn as_is_passes_text_through() {
        let w = wrap_java(STATEMENTS, WrapLevel::AsIs);
        assert_eq!(w.text, STATEMENTS);
        assert_eq!(w.map_line(3), 3);
    }

    #[test]
    fn method_body_keeps_imports_outside_the_shell() {
        let w = wrap_java(STATEMENTS, WrapLevel::MethodBody);
        let lines: Vec<&str> = w.text.lines().collect();
        assert_eq!(lines[0], "import java.util.List;");
        assert_eq!(lines[1], "");
        assert_eq!(lines[2], CLASS_SHELL);
        assert_eq!(lines[3], METHOD_SHELL);
        assert_eq!(lines[4], "List<String> names = null;");
        assert_eq!(lines[6], "}");
        assert_eq!(lines[7], "}");
    }

    #[test]
    fn mapped_lines_point_at_verbatim_original_text() {
        for level in [WrapLevel::ClassBody, WrapLevel::MethodBody] {
            let w = wrap_java(STATEMENTS, level);
            let original: Vec<&str> = STATEMENTS.lines().collect();
            let wrapped: Vec<&str> = w.text.lines().collect();
            for (i, line) in wrapped.iter().enumerate() {
                let wrapped_line = (i + 1) as u32;
                let mapped = w.map_line(wrapped_line);
                let original_text = original[(mapped - 1) as usize];
                // Shell lines clamp to a nearby original line; every
                // non-shell line must map to its identical original.
                if *line != CLASS_SHELL && *line != METHOD_SHELL && *line != "}" {
                    assert_eq!(&original_text, line, "level {level:?} line {wrapped_line}");
                }
            }
        }
    }

    #[test]
    fn shell_line_diagnostics_clamp_into_range() {
        let w = wrap_java("int x = 1;", WrapLevel::MethodBody);
        // Wrapped text has 5 lines; the closing braces are lines 4-5.
        assert_eq!(w.map_line(5), 1);
        assert_eq!(w.map_line(40), 1);
        assert_eq!(w.map_line(1), 1);
    }

    #[test]
    fn structural_wrap_errors_are_recognized() {
        let d = |m: &str| Diagnostic::classified(m, Some(1), None);
        assert!(has_structural_wrap_error(&[d(
            "class, interface, or enum expected"
        )]));
        assert!(has_structural_wrap_error(&[d(
            "class, interface, enum, or record expected"
        )]));
        assert!(!has_structural_wrap_error(&[d("';' expected")]));
    }
}
