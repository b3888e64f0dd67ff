//! The repair chain: sequences the AI units (extraction, FQN inference,
//! error-message enhancement, code fixing) with the non-AI units (import
//! supplementation, compiler judgement), records a complete trace, and
//! also runs the single-prompt repair variants used for ablation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    resolution_status, supplement_fqns, CompilerConfig, Diagnostic, JudgeError, JudgeReport,
    Toolchain,
};
use crate::backend::{
    build_backend, BackendError, BackendSelector, CompletionBackend, CompletionParams,
    CompletionRequest, Transport,
};
use crate::prompt::{
    parse_fixed_code, parse_fqn_mappings, parse_simple_names, render_cot_prompt,
    render_direct_prompt, render_prompt, PromptKind, PromptStyle, RenderError, RenderedPrompt,
    TemplateError, UnitLibrary, UnitName,
};
use crate::snippet::{CodeSnippet, Language};

/// Which repair strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// The full unit chain.
    #[serde(rename = "chain")]
    Chain,
    /// One "make this code compilable" completion.
    #[serde(rename = "direct")]
    Direct,
    /// One completion that spells out all chain steps in a single prompt.
    #[serde(rename = "cot")]
    CoT,
    /// The chain with raw compiler messages fed to Code Fix unenhanced.
    #[serde(rename = "chain-no-eme")]
    ChainNoEme,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Chain,
        Variant::Direct,
        Variant::CoT,
        Variant::ChainNoEme,
    ];

    pub fn slug(&self) -> &'static str {
        match self {
            Variant::Chain => "chain",
            Variant::Direct => "direct",
            Variant::CoT => "cot",
            Variant::ChainNoEme => "chain-no-eme",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.iter().copied().find(|v| v.slug() == s)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

/// Everything a chain run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    /// Judge → enhance → fix iterations; at least 1.
    #[serde(default = "default_rounds")]
    pub max_repair_rounds: u32,
    #[serde(default)]
    pub prompt_style: PromptStyle,
    #[serde(default = "default_backend")]
    pub backend: BackendSelector,
    #[serde(default)]
    pub compiler: CompilerConfig,
    #[serde(default)]
    pub params: CompletionParams,
}

fn default_variant() -> Variant {
    Variant::Chain
}

fn default_rounds() -> u32 {
    1
}

fn default_backend() -> BackendSelector {
    BackendSelector::Live {
        cache: true,
        requests_per_minute: None,
    }
}

impl Default for ChainConfig {
    fn default() -> ChainConfig {
        ChainConfig {
            variant: Variant::Chain,
            max_repair_rounds: 1,
            prompt_style: PromptStyle::default(),
            backend: BackendSelector::Live {
                cache: true,
                requests_per_minute: None,
            },
            compiler: CompilerConfig::default(),
            params: CompletionParams::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        if self.max_repair_rounds == 0 {
            return Err(ChainError::Config(
                "max_repair_rounds must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    AI,
    NonAI,
}

/// One executed unit, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub unit_name: String,
    pub kind: StepKind,
    pub input_payload: String,
    pub output_payload: String,
    pub duration_ms: u64,
    /// Present exactly when `kind` is AI.
    pub backend_call_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub snippet_id: String,
    pub steps: Vec<StepRecord>,
}

impl ChainTrace {
    pub fn new(snippet_id: impl Into<String>) -> ChainTrace {
        ChainTrace {
            snippet_id: snippet_id.into(),
            steps: Vec::new(),
        }
    }

    fn push(
        &mut self,
        unit_name: &str,
        kind: StepKind,
        input_payload: String,
        output_payload: String,
        duration_ms: u64,
        backend_call_id: Option<String>,
    ) {
        self.steps.push(StepRecord {
            index: self.steps.len(),
            unit_name: unit_name.to_string(),
            kind,
            input_payload,
            output_payload,
            duration_ms,
            backend_call_id,
        });
    }

    pub fn ai_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == StepKind::AI).count()
    }

    pub fn has_step(&self, unit_name: &str) -> bool {
        self.steps.iter().any(|s| s.unit_name == unit_name)
    }

    /// Digest of everything except durations, for comparing runs: two
    /// replays of the same fixtures must have equal signatures.
    pub fn signature(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.snippet_id.as_bytes());
        for step in &self.steps {
            let parts = [
                step.index.to_string(),
                step.unit_name.clone(),
                format!("{:?}", step.kind),
                step.input_payload.clone(),
                step.output_payload.clone(),
                step.backend_call_id.as_deref().unwrap_or("-").to_string(),
            ];
            for part in &parts {
                hasher.update(part.as_bytes());
                hasher.update([0]);
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// Final verdict of a chain run, from the last judgement pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainStatus {
    Compilable,
    NonFqnRemaining,
    SyntaxRemaining,
    BothRemaining,
    BackendError,
}

impl ChainStatus {
    /// `Compilable` iff the report has zero diagnostics. A report with
    /// only `Other` diagnostics is not compilable yet blocks neither
    /// tracked category; it lands in `SyntaxRemaining` as the closest
    /// "still broken" bucket.
    pub fn from_report(report: &JudgeReport) -> ChainStatus {
        if report.is_clean() {
            return ChainStatus::Compilable;
        }
        let status = resolution_status(report);
        match (status.non_fqn_free, status.syntax_free) {
            (false, false) => ChainStatus::BothRemaining,
            (false, true) => ChainStatus::NonFqnRemaining,
            (true, _) => ChainStatus::SyntaxRemaining,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainResult {
    /// The best code the chain produced; never raw unparsed model text.
    pub final_code: String,
    pub status: ChainStatus,
    pub trace: ChainTrace,
    /// Present when `status` is `BackendError`.
    pub failure: Option<String>,
    /// The last judgement, absent only when the backend failed before
    /// one ran.
    pub final_judge: Option<JudgeReport>,
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

const UNIT_FQN_SUPPLEMENT: &str = "FQN Supplement";
const UNIT_ERROR_JUDGEMENT: &str = "Error Judgement";

/// Executes chains. Cheap to clone; safe to share across worker threads.
#[derive(Clone)]
pub struct ChainRunner {
    units: Arc<UnitLibrary>,
    backend: Arc<dyn CompletionBackend>,
    toolchain: Arc<Toolchain>,
    config: ChainConfig,
}

impl ChainRunner {
    /// Build from configuration alone: bundled unit templates, backend
    /// from the selector (HTTP transport from the environment when the
    /// selector needs one), compiler from the compiler config.
    pub fn new(config: ChainConfig) -> Result<ChainRunner, ChainError> {
        config.validate()?;
        let backend = build_backend(&config.backend, None)?;
        ChainRunner::assemble(config, backend)
    }

    /// Like [`ChainRunner::new`] with an injected transport for the live
    /// or record backend — the seam tests and hermetic runs use.
    pub fn with_transport(
        config: ChainConfig,
        transport: Arc<dyn Transport>,
    ) -> Result<ChainRunner, ChainError> {
        config.validate()?;
        let backend = build_backend(&config.backend, Some(transport))?;
        ChainRunner::assemble(config, backend)
    }

    fn assemble(
        config: ChainConfig,
        backend: Arc<dyn CompletionBackend>,
    ) -> Result<ChainRunner, ChainError> {
        Ok(ChainRunner {
            units: Arc::new(UnitLibrary::bundled()?),
            backend,
            toolchain: Arc::new(Toolchain::from_config(&config.compiler)?),
            config,
        })
    }

    /// Full injection, for custom templates or pre-built parts.
    pub fn with_parts(
        config: ChainConfig,
        units: Arc<UnitLibrary>,
        backend: Arc<dyn CompletionBackend>,
        toolchain: Arc<Toolchain>,
    ) -> Result<ChainRunner, ChainError> {
        config.validate()?;
        Ok(ChainRunner {
            units,
            backend,
            toolchain,
            config,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn toolchain(&self) -> &Toolchain {
        &self.toolchain
    }

    pub fn units(&self) -> &UnitLibrary {
        &self.units
    }

    /// Render one AI unit's prompt under this runner's style.
    pub fn render_unit_prompt(
        &self,
        unit: UnitName,
        input_fields: &[(&str, &str)],
    ) -> Result<RenderedPrompt, RenderError> {
        render_prompt(
            self.units.unit(unit),
            input_fields,
            &self.config.prompt_style,
        )
    }

    /// One raw completion against this runner's backend.
    pub fn complete_prompt(&self, prompt: RenderedPrompt) -> Result<String, BackendError> {
        let request = CompletionRequest {
            prompt,
            params: self.config.params.clone(),
        };
        Ok(self.backend.complete(&request)?.text)
    }

    /// Run the configured variant over one snippet.
    pub fn run_chain(&self, snippet: &CodeSnippet) -> Result<ChainResult, ChainError> {
        let mut trace = ChainTrace::new(&snippet.id);
        match self.config.variant {
            Variant::Direct | Variant::CoT => self.run_single_prompt(snippet, trace),
            Variant::Chain | Variant::ChainNoEme => {
                let mut current = snippet.clone();
                if snippet.language == Language::JavaLike {
                    match self.fqn_inference_into(&current, &mut trace) {
                        Ok(supplemented) => current = supplemented,
                        Err(err) => {
                            return Ok(backend_failed(snippet.source.clone(), trace, err))
                        }
                    }
                }
                self.syntax_fix_into(&current, trace)
            }
        }
    }

    /// FQN inference alone: extraction → mapping → supplement. Returns the
    /// supplemented snippet and the steps it took.
    pub fn run_fqn_inference(
        &self,
        snippet: &CodeSnippet,
    ) -> Result<(CodeSnippet, ChainTrace), ChainError> {
        let mut trace = ChainTrace::new(&snippet.id);
        let result = self.fqn_inference_into(snippet, &mut trace)?;
        Ok((result, trace))
    }

    /// Syntax repair alone: judge → (enhance) → fix rounds.
    pub fn run_syntax_fix(&self, snippet: &CodeSnippet) -> Result<ChainResult, ChainError> {
        let trace = ChainTrace::new(&snippet.id);
        self.syntax_fix_into(snippet, trace)
    }

    // --- chain pieces ----------------------------------------------------

    fn fqn_inference_into(
        &self,
        snippet: &CodeSnippet,
        trace: &mut ChainTrace,
    ) -> Result<CodeSnippet, BackendError> {
        if snippet.language != Language::JavaLike {
            // The FQN module only exists for the Java-language corpus.
            return Ok(snippet.clone());
        }
        let extraction_response = self.ai_step(
            PromptKind::Unit(UnitName::SimplenameExtraction),
            &[("code", &snippet.source)],
            trace,
        )?;
        let names = parse_simple_names(&extraction_response);
        if names.is_empty() {
            // Nothing to infer; skip the mapping call entirely.
            return Ok(snippet.clone());
        }
        let names_text = names.join(", ");
        let mapping_response = self.ai_step(
            PromptKind::Unit(UnitName::SimplenameToFqn),
            &[("code", &snippet.source), ("simple_names", &names_text)],
            trace,
        )?;
        let parsed = parse_fqn_mappings(&mapping_response, &names);
        for miss in &parsed.misses {
            log::warn!("{}: no qualified name offered for `{miss}`", snippet.id);
        }
        let supplemented = supplement_fqns(&snippet.source, &parsed.mappings);
        trace.push(
            UNIT_FQN_SUPPLEMENT,
            StepKind::NonAI,
            snippet.source.clone(),
            supplemented.clone(),
            0,
            None,
        );
        Ok(snippet.with_source(supplemented))
    }

    fn syntax_fix_into(
        &self,
        snippet: &CodeSnippet,
        mut trace: ChainTrace,
    ) -> Result<ChainResult, ChainError> {
        let language = snippet.language;
        let mut code = snippet.source.clone();
        let mut report = self.judge_step(language, &code, &mut trace)?;
        if !report.is_clean() {
            for _ in 0..self.config.max_repair_rounds {
                let error_message = format_diagnostics(&report.diagnostics);
                let explanation = if self.config.variant == Variant::ChainNoEme {
                    error_message.clone()
                } else {
                    match self.enhance_step(&code, &error_message, &mut trace) {
                        Ok(text) => text,
                        Err(err) => return Ok(backend_failed(code, trace, err)),
                    }
                };
                let fix_response = match self.ai_step(
                    PromptKind::Unit(UnitName::CodeFix),
                    &[("code", &code), ("explanation", &explanation)],
                    &mut trace,
                ) {
                    Ok(text) => text,
                    Err(err) => return Ok(backend_failed(code, trace, err)),
                };
                match parse_fixed_code(&fix_response) {
                    Ok(fixed) => code = fixed,
                    // The raw response is already in the trace; the round
                    // is abandoned and the previous code re-judged.
                    Err(err) => log::warn!("{}: fix response unusable: {err}", snippet.id),
                }
                report = self.judge_step(language, &code, &mut trace)?;
                if report.is_clean() {
                    break;
                }
            }
        }
        Ok(ChainResult {
            final_code: code,
            status: ChainStatus::from_report(&report),
            trace,
            failure: None,
            final_judge: Some(report),
        })
    }

    fn run_single_prompt(
        &self,
        snippet: &CodeSnippet,
        mut trace: ChainTrace,
    ) -> Result<ChainResult, ChainError> {
        let (kind, prompt) = match self.config.variant {
            Variant::Direct => (PromptKind::Direct, render_direct_prompt(&snippet.source)?),
            Variant::CoT => (PromptKind::CoT, render_cot_prompt(&snippet.source)?),
            _ => unreachable!("single-prompt path demands Direct or CoT"),
        };
        let response = match self.complete_into(kind, prompt, &mut trace) {
            Ok(text) => text,
            Err(err) => return Ok(backend_failed(snippet.source.clone(), trace, err)),
        };
        let mut code = snippet.source.clone();
        match parse_fixed_code(&response) {
            Ok(fixed) => code = fixed,
            Err(err) => log::warn!("{}: repair response unusable: {err}", snippet.id),
        }
        let report = self.judge_step(snippet.language, &code, &mut trace)?;
        Ok(ChainResult {
            final_code: code,
            status: ChainStatus::from_report(&report),
            trace,
            failure: None,
            final_judge: Some(report),
        })
    }

    // --- steps ------------------------------------------------------------

    fn enhance_step(
        &self,
        code: &str,
        error_message: &str,
        trace: &mut ChainTrace,
    ) -> Result<String, BackendError> {
        let text = self.ai_step(
            PromptKind::Unit(UnitName::ErrorMessageEnhance),
            &[("code", code), ("error_message", error_message)],
            trace,
        )?;
        if text.trim().is_empty() {
            // An empty explanation would starve Code Fix; fall back to
            // the raw compiler message.
            log::warn!("empty explanation from the enhance unit; using raw message");
            return Ok(error_message.to_string());
        }
        Ok(text.trim().to_string())
    }

    fn ai_step(
        &self,
        kind: PromptKind,
        input_fields: &[(&str, &str)],
        trace: &mut ChainTrace,
    ) -> Result<String, BackendError> {
        let unit = match kind {
            PromptKind::Unit(unit) => unit,
            _ => unreachable!("field-based prompts are unit prompts"),
        };
        let prompt = render_prompt(
            self.units.unit(unit),
            input_fields,
            &self.config.prompt_style,
        )
        .map_err(|e| BackendError::Config {
            message: e.to_string(),
        })?;
        self.complete_into(kind, prompt, trace)
    }

    fn complete_into(
        &self,
        kind: PromptKind,
        prompt: RenderedPrompt,
        trace: &mut ChainTrace,
    ) -> Result<String, BackendError> {
        let request = CompletionRequest {
            prompt,
            params: self.config.params.clone(),
        };
        let response = self.backend.complete(&request)?;
        trace.push(
            &kind.to_string(),
            StepKind::AI,
            request.prompt.text,
            response.text.clone(),
            response.latency_ms,
            Some(response.call_id),
        );
        Ok(response.text)
    }

    fn judge_step(
        &self,
        language: Language,
        code: &str,
        trace: &mut ChainTrace,
    ) -> Result<JudgeReport, ChainError> {
        let report = self.toolchain.judge_source(language, code)?;
        let payload = serde_json::json!({
            "wrap_level": report.wrap_level_used,
            "exit": report.compiler_exit,
            "diagnostics": report.diagnostics,
        });
        trace.push(
            UNIT_ERROR_JUDGEMENT,
            StepKind::NonAI,
            code.to_string(),
            payload.to_string(),
            report.elapsed_ms,
            None,
        );
        Ok(report)
    }
}

fn backend_failed(final_code: String, trace: ChainTrace, err: BackendError) -> ChainResult {
    ChainResult {
        final_code,
        status: ChainStatus::BackendError,
        trace,
        failure: Some(err.to_string()),
        final_judge: None,
    }
}

/// Compiler diagnostics as the text handed to the enhance/fix prompts.
pub fn format_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| match d.line {
            Some(line) => format!("line {line}: error: {}", d.raw_message),
            None => format!("error: {}", d.raw_message),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::JavaJudgeKind;
    use crate::backend::ScriptedTransport;

    fn config(variant: Variant) -> ChainConfig {
        ChainConfig {
            variant,
            compiler: CompilerConfig {
                java: JavaJudgeKind::Builtin,
                ..CompilerConfig::default()
            },
            ..ChainConfig::default()
        }
    }

    fn runner(variant: Variant, script: Vec<&str>) -> ChainRunner {
        let transport = Arc::new(ScriptedTransport::new(
            script.into_iter().map(|s| Ok(s.to_string())).collect(),
        ));
        ChainRunner::with_transport(config(variant), transport).unwrap()
    }

    fn java(source: &str) -> CodeSnippet {
        CodeSnippet::new("s1", Language::JavaLike, source).unwrap()
    }

    const BROKEN: &str =
        "String[] fruits = {\"apple\" \"banana\"};\nString s = StringUtils.join(fruits, \",\");\n";
    const FIXED: &str = "import org.apache.commons.lang3.StringUtils;\n\
         String[] fruits = {\"apple\", \"banana\"};\nString s = StringUtils.join(fruits, \",\");\n";

    #[test]
    fn full_chain_repairs_both_error_kinds() {
        let runner = runner(
            Variant::Chain,
            vec![
                "StringUtils",
                "StringUtils -> org.apache.commons.lang3.StringUtils",
                "The array initializer is missing a comma between the two strings; add it.",
                FIXED,
            ],
        );
        let result = runner.run_chain(&java(BROKEN)).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable, "{result:#?}");
        assert_eq!(result.final_code, FIXED.trim_end());
        assert!(result
            .final_code
            .contains("import org.apache.commons.lang3.StringUtils;"));
        let names: Vec<&str> = result
            .trace
            .steps
            .iter()
            .map(|s| s.unit_name.as_str())
            .collect();
        assert_eq!(
            names,
            vec![
                "Simplename Extraction",
                "Simplename to FQN",
                "FQN Supplement",
                "Error Judgement",
                "Error Message Enhance",
                "Code Fix",
                "Error Judgement",
            ]
        );
        assert_eq!(result.trace.ai_steps(), 4);
        for (i, step) in result.trace.steps.iter().enumerate() {
            assert_eq!(step.index, i);
            assert_eq!(step.backend_call_id.is_some(), step.kind == StepKind::AI);
        }
    }

    #[test]
    fn clean_code_short_circuits_without_repair_steps() {
        // Extraction finds nothing, so mapping is skipped too.
        let runner = runner(Variant::Chain, vec![""]);
        let snippet = java("int x = 1;\nint y = x + 1;\n");
        let result = runner.run_chain(&snippet).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable);
        assert_eq!(result.final_code, snippet.source);
        assert_eq!(result.trace.ai_steps(), 1);
        assert!(!result.trace.has_step("Error Message Enhance"));
        assert!(!result.trace.has_step("Code Fix"));
        let judge = result.trace.steps.last().unwrap();
        assert_eq!(judge.unit_name, "Error Judgement");
        assert!(judge.output_payload.contains("\"diagnostics\":[]"));
    }

    #[test]
    fn syntax_fix_alone_makes_zero_ai_calls_on_clean_input() {
        let runner = runner(Variant::Chain, vec![]);
        let snippet = java("class Ok { int x; }\n");
        let result = runner.run_syntax_fix(&snippet).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable);
        assert_eq!(result.final_code, snippet.source);
        assert_eq!(result.trace.ai_steps(), 0);
    }

    #[test]
    fn direct_variant_is_exactly_one_ai_call() {
        let runner = runner(Variant::Direct, vec!["int x = 1;\n"]);
        let result = runner.run_chain(&java("int x = 1\n")).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable);
        assert_eq!(result.trace.ai_steps(), 1);
        assert_eq!(result.final_code, "int x = 1;");
        let step = &result.trace.steps[0];
        assert_eq!(step.unit_name, "Direct Repair");
        assert!(step.input_payload.contains("make this code compilable"));
    }

    #[test]
    fn cot_variant_is_exactly_one_ai_call() {
        let runner = runner(Variant::CoT, vec!["int x = 1;\n"]);
        let result = runner.run_chain(&java("int x = 1\n")).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable);
        assert_eq!(result.trace.ai_steps(), 1);
        assert_eq!(result.trace.steps[0].unit_name, "CoT Repair");
    }

    #[test]
    fn no_eme_feeds_raw_messages_to_code_fix() {
        let runner = runner(
            Variant::ChainNoEme,
            vec!["", "int x = 1;\nint y = 2;\n"],
        );
        let result = runner.run_chain(&java("int x = 1\nint y = 2;\n")).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable, "{result:#?}");
        assert!(!result.trace.has_step("Error Message Enhance"));
        let fix = result
            .trace
            .steps
            .iter()
            .find(|s| s.unit_name == "Code Fix")
            .unwrap();
        assert!(
            fix.input_payload.contains("';' expected"),
            "raw compiler wording must reach the fix prompt"
        );
    }

    #[test]
    fn unusable_fix_response_never_becomes_final_code() {
        // Fix returns an empty response; the round aborts, the original
        // code is re-judged and returned.
        let runner = runner(Variant::Chain, vec!["", "an explanation", ""]);
        let broken = "int x = 1\n";
        let result = runner.run_chain(&java(broken)).unwrap();
        assert_eq!(result.status, ChainStatus::SyntaxRemaining);
        assert_eq!(result.final_code, broken);
        assert!(result.trace.has_step("Code Fix"));
        assert!(!result.final_judge.as_ref().unwrap().is_clean());
    }

    #[test]
    fn backend_failure_is_a_status_not_a_panic() {
        // Script exhausts immediately: the extraction call fails fatally.
        let runner = runner(Variant::Chain, vec![]);
        let result = runner.run_chain(&java(BROKEN)).unwrap();
        assert_eq!(result.status, ChainStatus::BackendError);
        assert!(result.failure.as_ref().unwrap().contains("exhausted"));
        assert_eq!(result.final_code, BROKEN);
        assert!(result.final_judge.is_none());
    }

    #[test]
    fn python_snippets_skip_fqn_inference() {
        let runner = runner(
            Variant::Chain,
            vec![
                "The print call is missing its closing parenthesis.",
                "print('hi')\n",
            ],
        );
        let snippet = CodeSnippet::new("p1", Language::PythonLike, "print('hi'\n").unwrap();
        let result = runner.run_chain(&snippet).unwrap();
        assert_eq!(result.status, ChainStatus::Compilable, "{result:#?}");
        assert!(!result.trace.has_step("Simplename Extraction"));
        assert!(!result.trace.has_step("Simplename to FQN"));
        assert!(!result.trace.has_step("FQN Supplement"));
        assert_eq!(result.trace.ai_steps(), 2);
    }

    #[test]
    fn repeat_runs_with_identical_fixtures_have_identical_signatures() {
        let script = || {
            vec![
                "StringUtils",
                "StringUtils -> org.apache.commons.lang3.StringUtils",
                "Add the missing comma.",
                FIXED,
            ]
        };
        let a = runner(Variant::Chain, script())
            .run_chain(&java(BROKEN))
            .unwrap();
        let b = runner(Variant::Chain, script())
            .run_chain(&java(BROKEN))
            .unwrap();
        assert_eq!(a.final_code, b.final_code);
        assert_eq!(a.trace.signature(), b.trace.signature());
    }

    #[test]
    fn fqn_inference_never_touches_non_import_lines() {
        let runner = runner(
            Variant::Chain,
            vec![
                "StringUtils",
                "StringUtils -> org.apache.commons.lang3.StringUtils",
            ],
        );
        let snippet = java(BROKEN);
        let (supplemented, trace) = runner.run_fqn_inference(&snippet).unwrap();
        let original: Vec<&str> = snippet
            .source
            .lines()
            .filter(|l| !l.trim_start().starts_with("import "))
            .collect();
        let result: Vec<&str> = supplemented
            .source
            .lines()
            .filter(|l| !l.trim_start().starts_with("import "))
            .collect();
        assert_eq!(original, result);
        assert!(supplemented
            .source
            .starts_with("import org.apache.commons.lang3.StringUtils;"));
        assert!(trace.has_step("FQN Supplement"));
    }

    #[test]
    fn zero_rounds_is_rejected() {
        let bad = ChainConfig {
            max_repair_rounds: 0,
            ..config(Variant::Chain)
        };
        assert!(matches!(
            ChainRunner::with_transport(bad, Arc::new(ScriptedTransport::new(vec![]))),
            Err(ChainError::Config(_))
        ));
    }

    #[test]
    fn variant_slugs_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.slug()), Some(v));
        }
        assert_eq!(Variant::parse("nope"), None);
    }
}
