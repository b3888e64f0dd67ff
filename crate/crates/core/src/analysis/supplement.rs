//! Import supplementation: combine inferred fully qualified names with
//! the original code by inserting import declarations.

use std::collections::BTreeSet;

use crate::prompt::FqnMapping;

/// Insert one import per usable mapping, immediately after the package
/// declaration when there is one, sorted lexicographically. Existing
/// non-import lines pass through byte-identical, and mappings that are
/// suspect, malformed, already imported or only used fully qualified are
/// skipped — never guessed at.
pub fn supplement_fqns(code: &str, mappings: &[FqnMapping]) -> String {
    let lines: Vec<&str> = code.lines().collect();
    let existing = existing_imports(&lines);

    // BTreeSet both de-duplicates repeated mappings and yields the
    // lexicographic insertion order.
    let mut additions: BTreeSet<String> = BTreeSet::new();
    for mapping in mappings {
        if mapping.suspect {
            log::warn!(
                "skipping suspect mapping {} -> {}: not applying unverified names",
                mapping.simple_name,
                mapping.fqn
            );
            continue;
        }
        if !mapping.fqn.contains('.') || mapping.simple_name.contains('.') {
            log::warn!(
                "skipping malformed mapping {} -> {}",
                mapping.simple_name,
                mapping.fqn
            );
            continue;
        }
        if existing.direct.contains(mapping.fqn.as_str()) {
            continue;
        }
        if let Some((package, _)) = mapping.fqn.rsplit_once('.') {
            if existing.wildcard.contains(&package) {
                continue;
            }
        }
        if only_used_fully_qualified(&lines, mapping) {
            continue;
        }
        additions.insert(mapping.fqn.clone());
    }
    if additions.is_empty() {
        return code.to_string();
    }

    let insert_at = lines
        .iter()
        .position(|l| {
            let t = l.trim_start();
            t.starts_with("package ") && t.contains(';')
        })
        .map(|i| i + 1)
        .unwrap_or(0);

    let mut out: Vec<String> = Vec::with_capacity(lines.len() + additions.len());
    out.extend(lines[..insert_at].iter().map(|l| l.to_string()));
    out.extend(additions.iter().map(|fqn| format!("import {fqn};")));
    out.extend(lines[insert_at..].iter().map(|l| l.to_string()));
    let mut result = out.join("\n");
    if code.ends_with('\n') {
        result.push('\n');
    }
    result
}

struct ExistingImports<'a> {
    direct: BTreeSet<&'a str>,
    wildcard: Vec<&'a str>,
}

fn existing_imports<'a>(lines: &[&'a str]) -> ExistingImports<'a> {
    let mut direct = BTreeSet::new();
    let mut wildcard = Vec::new();
    for line in lines {
        let t = line.trim();
        let Some(body) = t.strip_prefix("import ") else {
            continue;
        };
        let Some(body) = body.trim().strip_suffix(';') else {
            continue;
        };
        let body = body.trim().trim_start_matches("static ").trim();
        match body.strip_suffix(".*") {
            Some(pkg) => wildcard.push(pkg),
            None => {
                direct.insert(body);
            }
        }
    }
    ExistingImports { direct, wildcard }
}

/// True when the code references the name only through its fully
/// qualified spelling, so an import would be redundant.
fn only_used_fully_qualified(lines: &[&str], mapping: &FqnMapping) -> bool {
    let mut qualified = false;
    for line in lines {
        if line.trim_start().starts_with("import ") {
            continue;
        }
        for (start, _) in line.match_indices(mapping.simple_name.as_str()) {
            let before = line[..start].chars().next_back();
            let after = line[start + mapping.simple_name.len()..].chars().next();
            if before.is_some_and(is_ident_char) || after.is_some_and(is_ident_char) {
                continue; // inside a longer identifier
            }
            if before == Some('.') {
                qualified = true;
            } else {
                return false; // a bare use exists: the import is needed
            }
        }
    }
    qualified
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}
