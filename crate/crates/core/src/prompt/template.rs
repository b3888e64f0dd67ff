//! Loading and validation of unit template files.
//!
//! Each unit ships as one TOML document holding the task description, the
//! input-field schema and exactly five demonstration examples. The bundled
//! templates are compiled in; a directory of edited copies can be loaded
//! at startup instead.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{Example, FieldSpec, UnitName, UnitSpec, EXAMPLES_PER_UNIT};

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("template {origin} is malformed: {message}")]
    Parse { origin: String, message: String },
    #[error("template {origin} is invalid: {message}")]
    Invalid { origin: String, message: String },
}

#[derive(Debug, Deserialize)]
struct UnitFile {
    name: String,
    task_description: String,
    #[serde(default)]
    fields: Vec<FieldFile>,
    #[serde(default)]
    examples: Vec<ExampleFile>,
}

#[derive(Debug, Deserialize)]
struct FieldFile {
    key: String,
    label: String,
}

#[derive(Debug, Deserialize)]
struct ExampleFile {
    input: String,
    output: String,
}

/// The four unit templates, loaded and validated.
#[derive(Debug, Clone)]
pub struct UnitLibrary {
    specs: Vec<UnitSpec>,
}

const BUNDLED: [(UnitName, &str); 4] = [
    (
        UnitName::SimplenameExtraction,
        include_str!("../../config/units/simplename-extraction.toml"),
    ),
    (
        UnitName::SimplenameToFqn,
        include_str!("../../config/units/simplename-to-fqn.toml"),
    ),
    (
        UnitName::ErrorMessageEnhance,
        include_str!("../../config/units/error-message-enhance.toml"),
    ),
    (
        UnitName::CodeFix,
        include_str!("../../config/units/code-fix.toml"),
    ),
];

impl UnitLibrary {
    /// The templates compiled into the crate.
    pub fn bundled() -> Result<UnitLibrary, TemplateError> {
        let mut specs = Vec::with_capacity(4);
        for (name, text) in BUNDLED {
            specs.push(parse_unit(name, text, &format!("bundled:{}", name.slug()))?);
        }
        Ok(UnitLibrary { specs })
    }

    /// Load `<slug>.toml` for every unit from a directory of edited
    /// templates.
    pub fn load_dir(dir: &Path) -> Result<UnitLibrary, TemplateError> {
        let mut specs = Vec::with_capacity(4);
        for name in UnitName::ALL {
            let path = dir.join(format!("{}.toml", name.slug()));
            let text = std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.clone(),
                source,
            })?;
            specs.push(parse_unit(name, &text, &path.display().to_string())?);
        }
        Ok(UnitLibrary { specs })
    }

    pub fn unit(&self, name: UnitName) -> &UnitSpec {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .expect("library holds all four units")
    }

    pub fn units(&self) -> &[UnitSpec] {
        &self.specs
    }
}

fn parse_unit(name: UnitName, text: &str, origin: &str) -> Result<UnitSpec, TemplateError> {
    let file: UnitFile = toml::from_str(text).map_err(|e| TemplateError::Parse {
        origin: origin.to_string(),
        // The TOML error display carries exact line/column positions.
        message: e.to_string(),
    })?;
    let invalid = |message: String| TemplateError::Invalid {
        origin: origin.to_string(),
        message,
    };
    if file.name != name.slug() {
        return Err(invalid(format!(
            "declares name `{}`, expected `{}`",
            file.name,
            name.slug()
        )));
    }
    if file.task_description.trim().is_empty() {
        return Err(invalid("task_description is empty".into()));
    }
    if file.examples.len() != EXAMPLES_PER_UNIT {
        return Err(invalid(format!(
            "has {} examples, exactly {} required",
            file.examples.len(),
            EXAMPLES_PER_UNIT
        )));
    }
    if file.fields.is_empty() {
        return Err(invalid("declares no input fields".into()));
    }
    for (i, ex) in file.examples.iter().enumerate() {
        if ex.input.trim().is_empty() || ex.output.trim().is_empty() {
            return Err(invalid(format!("example {} has an empty side", i + 1)));
        }
    }
    Ok(UnitSpec {
        name,
        task_description: file.task_description.trim().to_string(),
        examples: file
            .examples
            .into_iter()
            .map(|e| Example {
                input: e.input.trim_matches('\n').to_string(),
                output: e.output.trim_matches('\n').to_string(),
            })
            .collect(),
        fields: file
            .fields
            .into_iter()
            .map(|f| FieldSpec {
                key: f.key,
                label: f.label,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_templates_load_and_validate() {
        let lib = UnitLibrary::bundled().unwrap();
        for name in UnitName::ALL {
            let spec = lib.unit(name);
            assert_eq!(spec.examples.len(), EXAMPLES_PER_UNIT);
            assert!(!spec.task_description.is_empty());
        }
        assert_eq!(
            lib.unit(UnitName::SimplenameExtraction).task_description,
            "Extract the simple names in the code"
        );
        assert_eq!(
            lib.unit(UnitName::SimplenameToFqn).task_description,
            "Convert the simplename to FQN"
        );
    }

    #[test]
    fn wrong_example_count_is_rejected_with_position() {
        let text = r#"
name = "code-fix"
task_description = "Fix errors in code based on error message explanation"

[[fields]]
key = "code"
label = "Code"

[[examples]]
input = "a"
output = "b"
"#;
        let err = parse_unit(UnitName::CodeFix, text, "test").unwrap_err();
        assert!(err.to_string().contains("exactly 5"));
    }

    #[test]
    fn malformed_toml_reports_position() {
        let err = parse_unit(UnitName::CodeFix, "name = [unclosed", "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") || msg.contains("expected"), "{msg}");
    }

    #[test]
    fn load_dir_roundtrips_bundled_files() {
        let dir = tempfile::tempdir().unwrap();
        for (name, text) in BUNDLED {
            std::fs::write(dir.path().join(format!("{}.toml", name.slug())), text).unwrap();
        }
        let lib = UnitLibrary::load_dir(dir.path()).unwrap();
        let bundled = UnitLibrary::bundled().unwrap();
        for name in UnitName::ALL {
            assert_eq!(lib.unit(name), bundled.unit(name));
        }
    }
}
