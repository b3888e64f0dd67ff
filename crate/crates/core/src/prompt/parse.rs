//! Parsers that turn raw model responses into typed values.
//!
//! Model output is free text; the five demonstration examples nudge it into
//! a parseable shape, but the parsers stay tolerant of bullets, commas,
//! quoting and code fences. All parsers terminate on arbitrary input; only
//! an empty code-fix response is an error, because the chain must never
//! emit nothing as repaired code.

use thiserror::Error;

use super::FqnMapping;

/// De-duplicated, order-preserving simple names from an extraction
/// response. Accepts newline-, comma- and bullet-separated shapes, strips
/// quoting and code fences, and drops anything that is not an identifier.
pub fn parse_simple_names(response: &str) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for line in strip_code_fences(response).lines() {
        let line = strip_bullet(line.trim());
        for piece in line.split([',', ';']) {
            let token = strip_quoting(piece.trim());
            if is_identifier(token) && !names.iter().any(|n| n == token) {
                names.push(token.to_string());
            }
        }
    }
    names
}

/// The result of parsing a simplename-to-FQN response: one mapping per
/// requested name found in the response, plus the names the response
/// failed to cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqnParse {
    pub mappings: Vec<FqnMapping>,
    pub misses: Vec<String>,
}

/// Pair each requested simple name with the qualified name the response
/// proposes for it. Suspect mappings (suffix-rule failures) are flagged,
/// not dropped; requested names without a usable answer are reported as
/// misses.
pub fn parse_fqn_mappings(response: &str, requested: &[String]) -> FqnParse {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for line in strip_code_fences(response).lines() {
        let line = strip_bullet(line.trim());
        if line.is_empty() {
            continue;
        }
        let Some((lhs, rhs)) = split_mapping_line(line) else {
            continue;
        };
        let name = strip_quoting(lhs.trim());
        let fqn = strip_quoting(rhs.trim()).trim_end_matches(['.', ';']);
        if is_identifier(name) && is_qualified_name(fqn) {
            pairs.push((name.to_string(), fqn.to_string()));
        }
    }

    let mut mappings = Vec::new();
    let mut misses = Vec::new();
    for name in requested {
        match pairs.iter().find(|(n, _)| n == name) {
            Some((_, fqn)) => mappings.push(FqnMapping::new(name.clone(), fqn.clone())),
            None => misses.push(name.clone()),
        }
    }
    FqnParse { mappings, misses }
}

fn split_mapping_line(line: &str) -> Option<(&str, &str)> {
    for sep in ["->", "=>", "→"] {
        if let Some((l, r)) = line.split_once(sep) {
            return Some((l, r));
        }
    }
    // "Name: com.example.Name" or "Name = com.example.Name"
    for sep in [':', '='] {
        if let Some((l, r)) = line.split_once(sep) {
            return Some((l, r));
        }
    }
    None
}

#[derive(Debug, Error)]
pub enum FixedCodeError {
    #[error("code-fix response is empty")]
    EmptyResponse,
}

/// Extract repaired code from a code-fix response: the largest fenced code
/// block when any is present, otherwise the whole response trimmed.
pub fn parse_fixed_code(response: &str) -> Result<String, FixedCodeError> {
    if response.trim().is_empty() {
        return Err(FixedCodeError::EmptyResponse);
    }
    let blocks = fenced_blocks(response);
    if let Some(block) = blocks.into_iter().max_by_key(|b| b.len()) {
        if !block.trim().is_empty() {
            return Ok(block.trim_matches('\n').to_string());
        }
    }
    Ok(response.trim().to_string())
}

/// Contents of each ``` fenced block, language tags removed.
fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
            continue;
        }
        if let Some(block) = current.as_mut() {
            block.push_str(line);
            block.push('\n');
        }
    }
    blocks
}

/// Remove fence lines so list parsing sees the fenced content.
fn strip_code_fences(text: &str) -> String {
    text.lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Drop a leading "1.", "2)", "-", "*" or "•" list marker.
fn strip_bullet(line: &str) -> &str {
    let trimmed = line.trim_start();
    if let Some(rest) = trimmed.strip_prefix(['-', '*', '•']) {
        return rest.trim_start();
    }
    let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let after = &trimmed[digits..];
        if let Some(rest) = after.strip_prefix(['.', ')']) {
            return rest.trim_start();
        }
    }
    trimmed
}

fn strip_quoting(token: &str) -> &str {
    token.trim_matches(['"', '\'', '`'])
}

fn is_identifier(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

fn is_qualified_name(token: &str) -> bool {
    !token.is_empty() && token.split('.').all(is_identifier)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_name() {
        assert_eq!(parse_simple_names("StringUtils"), vec!["StringUtils"]);
    }

    #[test]
    fn empty_response_yields_empty_list() {
        assert!(parse_simple_names("").is_empty());
        assert!(parse_simple_names("   \n ...\n").is_empty());
    }

    #[test]
    fn bullets_and_duplicates() {
        let got = parse_simple_names("1. StringUtils\n2. ArrayList\n2. ArrayList");
        assert_eq!(got, vec!["StringUtils", "ArrayList"]);
    }

    #[test]
    fn commas_quotes_and_fences() {
        let got = parse_simple_names("```\n\"StringUtils\", `Gson`\n- ImmutableList\n```");
        assert_eq!(got, vec!["StringUtils", "Gson", "ImmutableList"]);
    }

    #[test]
    fn fqn_pairs_and_misses() {
        let requested = vec!["StringUtils".to_string(), "Gson".to_string()];
        let parsed = parse_fqn_mappings(
            "StringUtils -> org.apache.commons.lang3.StringUtils",
            &requested,
        );
        assert_eq!(parsed.mappings.len(), 1);
        assert!(parsed.mappings[0].fqn.ends_with(".StringUtils"));
        assert!(!parsed.mappings[0].suspect);
        assert_eq!(parsed.misses, vec!["Gson".to_string()]);
    }

    #[test]
    fn fqn_colon_form_and_suffix_flagging() {
        let requested = vec!["List".to_string()];
        let parsed = parse_fqn_mappings("List: java.awt.List", &requested);
        assert_eq!(parsed.mappings[0].fqn, "java.awt.List");
        assert!(!parsed.mappings[0].suspect);

        let parsed = parse_fqn_mappings("List: java.util.Lists", &requested);
        assert!(parsed.mappings[0].suspect);
    }

    #[test]
    fn fqn_parser_ignores_prose_lines() {
        let requested = vec!["Gson".to_string()];
        let parsed = parse_fqn_mappings(
            "Here are the FQNs.\n1. Gson -> com.google.gson.Gson\nHope that helps!",
            &requested,
        );
        assert_eq!(parsed.mappings[0].fqn, "com.google.gson.Gson");
        assert!(parsed.misses.is_empty());
    }

    #[test]
    fn fixed_code_prefers_largest_fenced_block() {
        let response = "Sure, here is the fix:\n```java\nint x = 1;\nint y = 2;\n```\nDone.";
        assert_eq!(parse_fixed_code(response).unwrap(), "int x = 1;\nint y = 2;");
    }

    #[test]
    fn fixed_code_bare_response_is_trimmed() {
        assert_eq!(parse_fixed_code("\nint x = 1;\n\n").unwrap(), "int x = 1;");
    }

    #[test]
    fn fixed_code_empty_is_error() {
        assert!(parse_fixed_code("   \n").is_err());
    }
}
