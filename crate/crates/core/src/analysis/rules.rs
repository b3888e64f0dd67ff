//! Data-driven classification of compiler messages.
//!
//! A rule table is an ordered list of needle sets: the first rule whose
//! needles all occur in the message (case-insensitively) assigns the
//! category, and anything unmatched is `Other`. The default table ships
//! as an embedded config file and can be replaced at runtime for a
//! different compiler release.

use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;

use super::Category;

#[derive(Debug, Clone, Deserialize)]
pub struct Rule {
    needles: Vec<String>,
    category: Category,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RuleTable {
    version: String,
    rules: Vec<Rule>,
}

const DEFAULT_TABLE: &str = include_str!("../../config/diagnostic-rules.toml");

impl RuleTable {
    /// The embedded default table.
    pub fn builtin() -> &'static RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            RuleTable::from_toml_str(DEFAULT_TABLE).expect("embedded rule table is valid")
        })
    }

    pub fn from_toml_str(text: &str) -> Result<RuleTable, String> {
        let table: RuleTable = toml::from_str(text).map_err(|e| e.to_string())?;
        if table.rules.is_empty() {
            return Err("rule table has no rules".to_string());
        }
        for (i, rule) in table.rules.iter().enumerate() {
            if rule.needles.is_empty() || rule.needles.iter().any(|n| n.trim().is_empty()) {
                return Err(format!("rule {} has an empty needle", i + 1));
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<RuleTable, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        RuleTable::from_toml_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Total and deterministic: every message gets exactly one category.
    pub fn classify(&self, raw_message: &str) -> Category {
        let haystack = raw_message.to_lowercase();
        for rule in &self.rules {
            if rule
                .needles
                .iter()
                .all(|needle| haystack.contains(needle.to_lowercase().as_str()))
            {
                return rule.category;
            }
        }
        Category::Other
    }
}

/// Classify with the embedded default table.
pub fn classify_diagnostic(raw_message: &str) -> Category {
    RuleTable::builtin().classify(raw_message)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn resolution_messages_are_non_fqn() {
        assert_eq!(classify_diagnostic("cannot find symbol"), Category::NonFqn);
        assert_eq!(
            classify_diagnostic("cannot find symbol: class StringUtils"),
            Category::NonFqn
        );
        assert_eq!(
            classify_diagnostic("package org.apache.commons.lang3 does not exist"),
            Category::NonFqn
        );
        assert_eq!(
            classify_diagnostic("name 'foo' is not defined"),
            Category::NonFqn
        );
    }

    #[test]
    fn token_level_messages_are_last_mile_syntax() {
        for msg in [
            "';' expected",
            "')' expected",
            "<identifier> expected",
            "unexpected token 'fruits'",
            "illegal start of expression",
            "reached end of file while parsing",
            "invalid syntax",
            "unexpected EOF while parsing",
            "'(' was never closed",
            "unmatched ')'",
            "unclosed string literal",
            "class, interface, or enum expected",
        ] {
            assert_eq!(classify_diagnostic(msg), Category::LastMileSyntax, "{msg}");
        }
    }

    #[test]
    fn unknown_messages_default_to_other() {
        assert_eq!(
            classify_diagnostic("incompatible types: int cannot be converted to String"),
            Category::Other
        );
        assert_eq!(classify_diagnostic(""), Category::Other);
        assert_eq!(
            classify_diagnostic("method does not override or implement a method"),
            Category::Other
        );
    }

    #[test]
    fn matching_is_case_insensitive_and_ordered() {
        assert_eq!(classify_diagnostic("CANNOT FIND SYMBOL"), Category::NonFqn);
        // A message containing both a resolution phrase and "expected"
        // takes the earlier (NonFqn) rule.
        assert_eq!(
            classify_diagnostic("cannot find symbol; ';' expected"),
            Category::NonFqn
        );
    }

    #[test]
    fn custom_table_loads_and_overrides() {
        let table = RuleTable::from_toml_str(
            "version = \"x\"\n[[rules]]\nneedles = [\"weird\"]\ncategory = \"Other\"\n",
        )
        .unwrap();
        assert_eq!(table.version(), "x");
        assert_eq!(table.classify("weird thing"), Category::Other);
        assert_eq!(table.classify("cannot find symbol"), Category::Other);
    }

    #[test]
    fn empty_needles_are_rejected() {
        let err = RuleTable::from_toml_str(
            "version = \"x\"\n[[rules]]\nneedles = []\ncategory = \"Other\"\n",
        )
        .unwrap_err();
        assert!(err.contains("empty needle"));
    }

    proptest! {
        /// Classification is total and deterministic over arbitrary text.
        #[test]
        fn classification_is_total_and_deterministic(msg in ".{0,200}") {
            let first = classify_diagnostic(&msg);
            let second = classify_diagnostic(&msg);
            prop_assert_eq!(first, second);
            prop_assert!(matches!(
                first,
                Category::NonFqn | Category::LastMileSyntax | Category::Other
            ));
        }
    }
}
