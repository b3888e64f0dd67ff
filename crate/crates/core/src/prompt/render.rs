//! Deterministic prompt rendering.
//!
//! The generic AI-unit template is: task description (when enabled), the
//! five demonstration examples in the order dictated by the style, then
//! the input block. Natural-language layout uses prose labels; the
//! semi-structured layout wraps each section in open/close tags.

use thiserror::Error;

use super::similarity::order_examples;
use super::{PromptKind, PromptStyle, RenderedPrompt, Representation, UnitSpec};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("missing required input field `{field}` for unit `{unit}`")]
    MissingField { unit: String, field: String },
    #[error("empty code input")]
    EmptyCode,
}

/// Render an AI-unit prompt from its template, input fields and style.
pub fn render_prompt(
    spec: &UnitSpec,
    input_fields: &[(&str, &str)],
    style: &PromptStyle,
) -> Result<RenderedPrompt, RenderError> {
    let input_text = render_input_text(spec, input_fields)?;
    let examples = order_examples(&spec.examples, &input_text, style.example_order);

    let mut sections: Vec<String> = Vec::with_capacity(2 + examples.len());
    match style.representation {
        Representation::NaturalLanguage => {
            if style.include_task_description {
                sections.push(format!("Task Description: {}", spec.task_description));
            }
            for (i, ex) in examples.iter().enumerate() {
                sections.push(format!(
                    "Example {}:\nInput:\n{}\nOutput:\n{}",
                    i + 1,
                    ex.input,
                    ex.output
                ));
            }
            sections.push(format!("Input:\n{input_text}\nOutput:"));
        }
        Representation::SemiStructured => {
            if style.include_task_description {
                sections.push(format!(
                    "<Task Description>{}</Task Description>",
                    spec.task_description
                ));
            }
            for ex in &examples {
                sections.push(format!(
                    "<Example>\nInput:\n{}\nOutput:\n{}\n</Example>",
                    ex.input, ex.output
                ));
            }
            sections.push(format!("<Input>\n{input_text}\n</Input>"));
        }
    }

    let text = sections.join("\n\n") + "\n";
    Ok(RenderedPrompt::new(PromptKind::Unit(spec.name), text))
}

/// Join the unit's input fields into the input-block text.
///
/// A single-field unit renders the bare value. Multi-field units label
/// each field; multi-line values go on their own lines under the label.
fn render_input_text(spec: &UnitSpec, input_fields: &[(&str, &str)]) -> Result<String, RenderError> {
    let mut parts = Vec::with_capacity(spec.fields.len());
    for field in &spec.fields {
        let value = input_fields
            .iter()
            .find(|(k, _)| *k == field.key)
            .map(|(_, v)| *v)
            .ok_or_else(|| RenderError::MissingField {
                unit: spec.name.slug().to_string(),
                field: field.key.clone(),
            })?;
        if spec.fields.len() == 1 {
            parts.push(value.to_string());
        } else if value.contains('\n') || field.key == "code" {
            parts.push(format!("{}:\n{}", field.label, value.trim_end_matches('\n')));
        } else {
            parts.push(format!("{}: {}", field.label, value));
        }
    }
    Ok(parts.join("\n"))
}

/// The single-instruction prompt used by the direct-repair variant.
pub fn render_direct_prompt(code: &str) -> Result<RenderedPrompt, RenderError> {
    if code.trim().is_empty() {
        return Err(RenderError::EmptyCode);
    }
    let text = format!("make this code compilable\n\n{}\n", code.trim_end_matches('\n'));
    Ok(RenderedPrompt::new(PromptKind::Direct, text))
}

/// One prompt describing all six repair steps in a single generative pass.
pub fn render_cot_prompt(code: &str) -> Result<RenderedPrompt, RenderError> {
    if code.trim().is_empty() {
        return Err(RenderError::EmptyCode);
    }
    let text = format!(
        "Make the following code compilable by working through these steps in one pass:\n\
         1. Simplename Extraction: extract the simple names used in the code.\n\
         2. Simplename to FQN: convert each simple name to its fully qualified name.\n\
         3. FQN Supplement: combine the code with the fully qualified names by adding imports.\n\
         4. Error Judgement: check the code for remaining compile errors.\n\
         5. Error Message Enhance: explain in plain English why the code causes an error and how to fix it.\n\
         6. Code Fix: fix the errors in the code based on the explanation.\n\
         Return only the final fixed code.\n\n{}\n",
        code.trim_end_matches('\n')
    );
    Ok(RenderedPrompt::new(PromptKind::CoT, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{ExampleOrder, UnitLibrary, UnitName};

    fn library() -> UnitLibrary {
        UnitLibrary::bundled().expect("bundled templates load")
    }

    #[test]
    fn basic_extraction_prompt_leads_with_task_description() {
        let lib = library();
        let spec = lib.unit(UnitName::SimplenameExtraction);
        let prompt = render_prompt(
            spec,
            &[("code", "String s = StringUtils.capitalize(x);")],
            &PromptStyle::default(),
        )
        .unwrap();
        assert!(prompt
            .text
            .starts_with("Task Description: Extract the simple names in the code"));
        assert_eq!(prompt.text.matches("Example ").count(), 5);
        assert!(prompt.text.trim_end().ends_with("Output:"));
    }

    #[test]
    fn semi_structured_wraps_sections_in_tags() {
        let lib = library();
        let spec = lib.unit(UnitName::SimplenameExtraction);
        let style = PromptStyle {
            representation: Representation::SemiStructured,
            ..PromptStyle::default()
        };
        let prompt = render_prompt(spec, &[("code", "int x = 1;")], &style).unwrap();
        assert!(prompt
            .text
            .starts_with("<Task Description>Extract the simple names in the code</Task Description>"));
        assert_eq!(prompt.text.matches("<Example>").count(), 5);
        assert_eq!(prompt.text.matches("</Example>").count(), 5);
        assert!(prompt.text.contains("<Input>\nint x = 1;\n</Input>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let lib = library();
        let spec = lib.unit(UnitName::CodeFix);
        let fields = [("code", "int x = 1"), ("explanation", "missing semicolon")];
        let a = render_prompt(spec, &fields, &PromptStyle::default()).unwrap();
        let b = render_prompt(spec, &fields, &PromptStyle::default()).unwrap();
        assert_eq!(a.content_hash, b.content_hash);
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn missing_field_is_named() {
        let lib = library();
        let spec = lib.unit(UnitName::SimplenameToFqn);
        let err = render_prompt(spec, &[("code", "int x;")], &PromptStyle::default())
            .unwrap_err();
        assert!(err.to_string().contains("simple_names"));
    }

    #[test]
    fn example_set_is_invariant_across_styles() {
        let lib = library();
        let spec = lib.unit(UnitName::SimplenameExtraction);
        let styles = [
            PromptStyle::default(),
            PromptStyle {
                include_task_description: false,
                ..PromptStyle::default()
            },
            PromptStyle {
                example_order: ExampleOrder::SimilarFirst,
                ..PromptStyle::default()
            },
            PromptStyle {
                example_order: ExampleOrder::DissimilarFirst,
                ..PromptStyle::default()
            },
            PromptStyle {
                representation: Representation::SemiStructured,
                ..PromptStyle::default()
            },
        ];
        for style in &styles {
            let prompt = render_prompt(spec, &[("code", "Gson g = new Gson();")], style).unwrap();
            for ex in &spec.examples {
                assert!(
                    prompt.text.contains(&ex.input) && prompt.text.contains(&ex.output),
                    "every example appears under style {style:?}"
                );
            }
        }
    }

    #[test]
    fn direct_prompt_contains_instruction_and_code() {
        let prompt = render_direct_prompt("int x = 1;").unwrap();
        assert!(prompt.text.contains("make this code compilable"));
        assert!(prompt.text.contains("int x = 1;"));
        assert!(render_direct_prompt("  \n").is_err());
    }

    #[test]
    fn cot_prompt_lists_six_steps() {
        let prompt = render_cot_prompt("int x = 1;").unwrap();
        for step in [
            "Simplename Extraction",
            "Simplename to FQN",
            "FQN Supplement",
            "Error Judgement",
            "Error Message Enhance",
            "Code Fix",
        ] {
            assert!(prompt.text.contains(step), "missing step {step}");
        }
        for n in 1..=6 {
            assert!(prompt.text.contains(&format!("{n}. ")));
        }
        let again = render_cot_prompt("int x = 1;").unwrap();
        assert_eq!(prompt.content_hash, again.content_hash);
    }
}
