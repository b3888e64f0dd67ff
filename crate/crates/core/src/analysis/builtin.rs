//! Bundled Java-language snippet checker, used when no `javac` is
//! installed.
//!
//! Two passes over a real parse tree:
//!
//! 1. **Syntax**: missing and error nodes reported by the Java grammar
//!    become expected-token / unexpected-token diagnostics.
//! 2. **Name resolution**: type names used by the snippet must be
//!    declared in it, imported (directly or by wildcard), written fully
//!    qualified, or resolvable from a classpath index of known fully
//!    qualified names (java.lang is implicit). Unresolvable names get
//!    `cannot find symbol` diagnostics; imports naming unknown packages
//!    get `package ... does not exist`, mirroring javac's wording so the
//!    one rule table classifies both judges.
//!
//! The checker is intentionally snippet-lenient: the grammar accepts
//! free-standing statements at top level, so no wrapping is needed, and
//! lowercase receivers (locals the snippet never declares) are not
//! flagged — partial code is allowed to reference context it does not
//! carry.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use tree_sitter::{Node, Parser};

use super::toolchain::JudgeError;
use super::{Diagnostic, JudgeReport, WrapLevel};

/// Set of fully qualified type names the checker can resolve against.
#[derive(Debug, Clone, Default)]
pub struct ClasspathIndex {
    fqns: BTreeSet<String>,
    by_simple: BTreeMap<String, Vec<String>>,
}

const DEFAULT_INDEX: &str = include_str!("../../config/classpath-index.txt");

impl ClasspathIndex {
    pub fn from_fqns<I, S>(fqns: I) -> ClasspathIndex
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut index = ClasspathIndex::default();
        for fqn in fqns {
            index.insert(fqn.into());
        }
        index
    }

    /// One fully qualified name per line; `#` starts a comment.
    pub fn parse(text: &str) -> ClasspathIndex {
        ClasspathIndex::from_fqns(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn load(path: &Path) -> std::io::Result<ClasspathIndex> {
        Ok(ClasspathIndex::parse(&std::fs::read_to_string(path)?))
    }

    /// The embedded default index.
    pub fn builtin() -> &'static ClasspathIndex {
        static INDEX: OnceLock<ClasspathIndex> = OnceLock::new();
        INDEX.get_or_init(|| ClasspathIndex::parse(DEFAULT_INDEX))
    }

    fn insert(&mut self, fqn: String) {
        if let Some((_, simple)) = fqn.rsplit_once('.') {
            self.by_simple
                .entry(simple.to_string())
                .or_default()
                .push(fqn.clone());
        }
        self.fqns.insert(fqn);
    }

    pub fn contains(&self, fqn: &str) -> bool {
        self.fqns.contains(fqn)
    }

    pub fn contains_in_package(&self, package: &str, simple: &str) -> bool {
        self.fqns.contains(&format!("{package}.{simple}"))
    }

    /// Does any entry live directly in `package`?
    pub fn has_package(&self, package: &str) -> bool {
        let prefix = format!("{package}.");
        self.fqns
            .range(prefix.clone()..)
            .next()
            .is_some_and(|fqn| fqn.starts_with(&prefix))
    }

    pub fn len(&self) -> usize {
        self.fqns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fqns.is_empty()
    }
}

#[derive(Debug)]
pub struct BuiltinJavaJudge {
    index: ClasspathIndex,
}

impl BuiltinJavaJudge {
    pub fn new(index: ClasspathIndex) -> BuiltinJavaJudge {
        BuiltinJavaJudge { index }
    }

    pub fn with_default_index() -> BuiltinJavaJudge {
        BuiltinJavaJudge::new(ClasspathIndex::builtin().clone())
    }

    pub fn judge(&self, source: &str) -> Result<JudgeReport, JudgeError> {
        let start = Instant::now();
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_java::LANGUAGE.into())
            .map_err(|e| JudgeError::ToolchainMissing {
                language: "java".to_string(),
                detail: format!("grammar rejected: {e}"),
            })?;
        let tree = parser
            .parse(source, None)
            .ok_or_else(|| JudgeError::ToolchainMissing {
                language: "java".to_string(),
                detail: "parser produced no tree".to_string(),
            })?;

        let mut diagnostics = Vec::new();
        collect_syntax_diagnostics(tree.root_node(), source, &mut diagnostics);
        let names = collect_names(tree.root_node(), source);
        diagnostics.extend(resolve_names(&names, &self.index));

        diagnostics.sort_by_key(|d| (d.line.unwrap_or(0), d.column.unwrap_or(0)));
        diagnostics.dedup_by(|a, b| a.raw_message == b.raw_message && a.line == b.line);
        let compiler_exit = i32::from(!diagnostics.is_empty());
        Ok(JudgeReport {
            diagnostics,
            wrap_level_used: WrapLevel::AsIs,
            compiler_exit,
            elapsed_ms: start.elapsed().as_millis() as u64,
        })
    }
}

// --- syntax pass ---------------------------------------------------------

fn collect_syntax_diagnostics(root: Node<'_>, source: &str, out: &mut Vec<Diagnostic>) {
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_missing() {
            let token = node.kind();
            let message = if token.chars().any(char::is_alphabetic) {
                format!("<{token}> expected")
            } else {
                format!("'{token}' expected")
            };
            out.push(located(message, node));
            continue;
        }
        if node.is_error() {
            out.push(located(
                format!("unexpected token '{}'", error_excerpt(node, source)),
                node,
            ));
            // Recurse anyway: an error subtree can still contain missing
            // tokens worth reporting separately.
        }
        for i in (0..node.child_count()).rev() {
            if let Some(child) = node.child(i as u32) {
                stack.push(child);
            }
        }
    }
}

fn located(message: String, node: Node<'_>) -> Diagnostic {
    let pos = node.start_position();
    Diagnostic::classified(message, Some(pos.row as u32 + 1), Some(pos.column as u32 + 1))
}

fn error_excerpt(node: Node<'_>, source: &str) -> String {
    let text = node.utf8_text(source.as_bytes()).unwrap_or("");
    let first_line = text.lines().next().unwrap_or("").trim();
    let mut excerpt: String = first_line.chars().take(24).collect();
    if excerpt.len() < first_line.len() {
        excerpt.push('…');
    }
    excerpt
}

// --- name-resolution pass ------------------------------------------------

#[derive(Debug, Default)]
struct CollectedNames {
    /// Types, type parameters and local/parameter variables the snippet
    /// declares itself.
    declared: HashSet<String>,
    /// Simple type-name uses: name → first location.
    used: BTreeMap<String, (u32, u32)>,
    /// Fully qualified uses appearing in the code body.
    qualified_uses: BTreeMap<String, (u32, u32)>,
    /// `import a.b.C;` / `import a.b.*;` (the flag marks wildcards).
    imports: Vec<ImportDecl>,
}

#[derive(Debug)]
struct ImportDecl {
    path: String,
    wildcard: bool,
    is_static: bool,
    line: u32,
}

fn collect_names(root: Node<'_>, source: &str) -> CollectedNames {
    let mut names = CollectedNames::default();
    let bytes = source.as_bytes();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let text = |n: Node<'_>| n.utf8_text(bytes).unwrap_or("").to_string();
        match node.kind() {
            "class_declaration"
            | "interface_declaration"
            | "enum_declaration"
            | "record_declaration"
            | "annotation_type_declaration" => {
                if let Some(name) = node.child_by_field_name("name") {
                    names.declared.insert(text(name));
                }
            }
            "type_parameter" => {
                // The parameter both declares its name and shadows any
                // same-named class; children still hold bound types.
                if let Some(name) = node
                    .named_children(&mut node.walk())
                    .find(|c| c.kind() == "type_identifier" || c.kind() == "identifier")
                {
                    names.declared.insert(text(name));
                }
            }
            "variable_declarator" | "formal_parameter" | "catch_formal_parameter"
            | "enhanced_for_statement" | "record_pattern_component" => {
                if let Some(name) = node.child_by_field_name("name") {
                    names.declared.insert(text(name));
                }
            }
            "inferred_parameters" => {
                for child in node.named_children(&mut node.walk()) {
                    if child.kind() == "identifier" {
                        names.declared.insert(text(child));
                    }
                }
            }
            "lambda_expression" => {
                if let Some(params) = node.child_by_field_name("parameters") {
                    if params.kind() == "identifier" {
                        names.declared.insert(text(params));
                    }
                }
            }
            "import_declaration" => {
                let decl = text(node);
                let body = decl
                    .trim_start_matches("import")
                    .trim()
                    .trim_end_matches(';')
                    .trim();
                let (is_static, body) = match body.strip_prefix("static ") {
                    Some(rest) => (true, rest.trim()),
                    None => (false, body),
                };
                let (path, wildcard) = match body.strip_suffix(".*") {
                    Some(p) => (p.to_string(), true),
                    None => (body.to_string(), false),
                };
                names.imports.push(ImportDecl {
                    path,
                    wildcard,
                    is_static,
                    line: node.start_position().row as u32 + 1,
                });
            }
            "type_identifier" => {
                let is_type_parameter_name = node
                    .parent()
                    .is_some_and(|p| p.kind() == "type_parameter");
                if !is_type_parameter_name {
                    record_use(&mut names.used, text(node), node);
                }
            }
            "scoped_type_identifier" => {
                // Fully qualified type in a declaration position; consume
                // it whole and skip the child type_identifier.
                record_use(&mut names.qualified_uses, text(node), node);
                continue;
            }
            "method_invocation" | "field_access" => {
                if let Some(object) = node.child_by_field_name("object") {
                    if object.kind() == "identifier" {
                        let name = text(object);
                        if starts_uppercase(&name) {
                            record_use(&mut names.used, name, object);
                        }
                    } else if object.kind() == "field_access" {
                        if let Some(fqn) = qualified_prefix(&text(object)) {
                            record_use(&mut names.qualified_uses, fqn, object);
                        }
                    }
                }
            }
            "marker_annotation" | "annotation" => {
                if let Some(name) = node.child_by_field_name("name") {
                    if name.kind() == "identifier" && starts_uppercase(&text(name)) {
                        record_use(&mut names.used, text(name), name);
                    }
                }
            }
            _ => {}
        }
        for i in (0..node.child_count()).rev() {
            if let Some(child) = node.child(i as u32) {
                stack.push(child);
            }
        }
    }
    names
}

fn record_use(map: &mut BTreeMap<String, (u32, u32)>, name: String, node: Node<'_>) {
    let pos = node.start_position();
    let loc = (pos.row as u32 + 1, pos.column as u32 + 1);
    let entry = map.entry(name).or_insert(loc);
    if loc < *entry {
        *entry = loc;
    }
}

fn starts_uppercase(name: &str) -> bool {
    name.chars().next().is_some_and(char::is_uppercase)
}

/// For a dotted expression like `org.apache.commons.lang3.StringUtils`
/// (or a longer member chain), the prefix ending at the first
/// uppercase-initial segment — the would-be type — if the head segment is
/// lowercase (a package, not a variable chain).
fn qualified_prefix(dotted: &str) -> Option<String> {
    let segments: Vec<&str> = dotted.split('.').collect();
    if segments.len() < 2 || starts_uppercase(segments[0]) {
        return None;
    }
    let type_pos = segments.iter().position(|s| starts_uppercase(s))?;
    Some(segments[..=type_pos].join("."))
}

fn resolve_names(names: &CollectedNames, index: &ClasspathIndex) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    // Imports of unknown packages/types fail exactly as javac reports
    // them with an incomplete classpath.
    for import in &names.imports {
        let target = if import.is_static && !import.wildcard {
            // `import static a.b.C.member;` - the type is the path minus
            // the member segment.
            match import.path.rsplit_once('.') {
                Some((ty, _)) => ty.to_string(),
                None => import.path.clone(),
            }
        } else {
            import.path.clone()
        };
        let ok = if import.wildcard && !import.is_static {
            index.has_package(&target)
        } else {
            index.contains(&target)
        };
        if !ok {
            let package = match target.rsplit_once('.') {
                Some((pkg, simple)) if starts_uppercase(simple) => pkg.to_string(),
                _ => target.clone(),
            };
            out.push(Diagnostic::classified(
                format!("package {package} does not exist"),
                Some(import.line),
                Some(1),
            ));
        }
    }

    let imported_types: HashSet<&str> = names
        .imports
        .iter()
        .filter(|i| !i.wildcard && !i.is_static)
        .filter_map(|i| i.path.rsplit_once('.').map(|(_, simple)| simple))
        .collect();
    let wildcard_packages: Vec<&str> = names
        .imports
        .iter()
        .filter(|i| i.wildcard && !i.is_static)
        .map(|i| i.path.as_str())
        .collect();

    for (name, &(line, column)) in &names.used {
        if names.declared.contains(name) || imported_types.contains(name.as_str()) {
            continue;
        }
        let in_wildcard = wildcard_packages
            .iter()
            .any(|pkg| index.contains_in_package(pkg, name));
        let in_java_lang = index.contains_in_package("java.lang", name);
        if in_wildcard || in_java_lang {
            continue;
        }
        out.push(Diagnostic::classified(
            format!("cannot find symbol: class {name}"),
            Some(line),
            Some(column),
        ));
    }

    for (fqn, &(line, column)) in &names.qualified_uses {
        if !index.contains(fqn) {
            let package = fqn.rsplit_once('.').map(|(p, _)| p).unwrap_or(fqn);
            out.push(Diagnostic::classified(
                format!("package {package} does not exist"),
                Some(line),
                Some(column),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Category;

    fn judge(source: &str) -> JudgeReport {
        BuiltinJavaJudge::with_default_index().judge(source).unwrap()
    }

    #[test]
    fn clean_snippet_with_imports_judges_clean() {
        let report = judge(
            "import java.util.List;\nimport java.util.ArrayList;\n\
             List<String> names = new ArrayList<>();\nnames.add(\"x\");\n\
             System.out.println(names);\n",
        );
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
        assert_eq!(report.compiler_exit, 0);
    }

    #[test]
    fn unimported_library_type_cannot_be_found() {
        let report = judge("String s = StringUtils.upperCase(\"x\");\n");
        assert_eq!(report.diagnostics.len(), 1, "{:#?}", report.diagnostics);
        let d = &report.diagnostics[0];
        assert_eq!(d.category, Category::NonFqn);
        assert!(d.raw_message.contains("StringUtils"));
        assert_eq!(d.line, Some(1));
    }

    #[test]
    fn missing_comma_in_array_initializer_is_syntax() {
        let report = judge("String[] fruits = {\"apple\" \"banana\"};\n");
        assert!(
            report
                .diagnostics
                .iter()
                .any(|d| d.category == Category::LastMileSyntax),
            "{:#?}",
            report.diagnostics
        );
    }

    #[test]
    fn missing_semicolon_reports_expected_token() {
        let report = judge("int x = 1\nint y = 2;\n");
        assert!(
            report
                .diagnostics
                .iter()
                .any(|d| d.raw_message == "';' expected" && d.line == Some(1)),
            "{:#?}",
            report.diagnostics
        );
    }

    #[test]
    fn both_error_kinds_are_reported_together() {
        let report = judge(
            "String[] fruits = {\"apple\" \"banana\"};\n\
             String s = StringUtils.join(fruits, \",\");\n",
        );
        assert!(report.count(Category::LastMileSyntax) >= 1, "{report:#?}");
        assert_eq!(report.count(Category::NonFqn), 1, "{report:#?}");
    }

    #[test]
    fn wildcard_imports_resolve_package_members() {
        let report = judge("import java.util.*;\nList<String> xs = new ArrayList<>();\n");
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
    }

    #[test]
    fn unknown_import_is_a_missing_package() {
        let report = judge("import com.nonexistent.Widget;\nWidget w = null;\n");
        assert!(
            report
                .diagnostics
                .iter()
                .any(|d| d.raw_message == "package com.nonexistent does not exist"
                    && d.category == Category::NonFqn),
            "{:#?}",
            report.diagnostics
        );
    }

    #[test]
    fn fully_qualified_use_sites_need_no_import() {
        let report = judge("java.util.List<String> xs = null;\nSystem.out.println(xs);\n");
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
        let report = judge(
            "String s = org.apache.commons.lang3.StringUtils.upperCase(\"x\");\n",
        );
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
    }

    #[test]
    fn snippet_declared_types_and_generics_resolve() {
        let report = judge(
            "class Box<T> {\n  T value;\n  Box<T> copy() { return this; }\n}\n\
             Box<String> b = new Box<>();\n",
        );
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
    }

    #[test]
    fn local_variables_are_not_mistaken_for_types() {
        let report = judge(
            "import java.util.Scanner;\nScanner Input = new Scanner(System.in);\n\
             int n = Input.nextInt();\n",
        );
        // `Input` is uppercase-initial but locally declared.
        assert!(report.is_clean(), "{:#?}", report.diagnostics);
    }

    #[test]
    fn index_parse_skips_comments_and_resolves_packages() {
        let index = ClasspathIndex::parse("# comment\n\njava.util.List\ncom.x.Y\n");
        assert_eq!(index.len(), 2);
        assert!(index.contains("java.util.List"));
        assert!(index.has_package("java.util"));
        assert!(!index.has_package("java.utilities"));
        assert!(index.contains_in_package("com.x", "Y"));
    }
}
