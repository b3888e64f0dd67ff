//! Dataset loading, chain evaluation, and the ablation and
//! prompt-sensitivity sweeps, with reports rendered as aligned tables.
//!
//! The three metrics are counts over per-record outcomes: resolved
//! non-FQNs and resolved last-mile syntax errors count records that
//! *carried* that error kind and whose final judgement is free of it;
//! all-resolved counts records whose every carried kind is resolved.
//! A kind carried by no record renders as `-`, never as zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::resolution_status;
use crate::chain::{
    ChainConfig, ChainError, ChainRunner, ChainStatus, ChainTrace, Variant,
};
use crate::prompt::{ExampleOrder, PromptStyle, Representation};
use crate::snippet::{CodeSnippet, Language};

/// The error kinds a dataset record can carry. `Other` diagnostics exist
/// at judgement time but are not a seedable dataset category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    NonFqn,
    LastMileSyntax,
}

/// A gold simple-name-to-FQN annotation on a Java-like record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFqn {
    pub simple_name: String,
    pub fqn: String,
}

/// One dataset entry: a broken snippet plus what is known to be wrong
/// with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(with = "language_name")]
    pub language: Language,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_fqns: Option<Vec<GoldFqn>>,
    pub error_kinds: BTreeSet<ErrorKind>,
}

impl DatasetRecord {
    pub fn snippet(&self) -> CodeSnippet {
        CodeSnippet::new(&self.id, self.language, &self.code)
            .expect("validated records have non-blank code")
    }
}

mod language_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::snippet::Language;

    pub fn serialize<S: Serializer>(lang: &Language, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(lang.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Language, D::Error> {
        let raw = String::deserialize(d)?;
        Language::parse(&raw)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown language `{raw}`")))
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Schema {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("dataset `{0}` has no records")]
    EmptyDataset(String),
    #[error("report failed self-audit: {0}")]
    Audit(String),
    #[error("invalid sensitivity grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Load a line-delimited dataset. Every line must parse and validate;
/// errors name the line. An empty file is an empty dataset.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, &path.display().to_string())
}

/// Parse dataset text; `origin` names the source in errors.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Vec<DatasetRecord>, EvalError> {
    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(line).map_err(|e| EvalError::Schema {
                origin: origin.to_string(),
                line: line_no,
                message: e.to_string(),
            })?;
        validate_record(&record).map_err(|message| EvalError::Schema {
            origin: origin.to_string(),
            line: line_no,
            message,
        })?;
        if let Some(first) = seen.insert(record.id.clone(), line_no) {
            return Err(EvalError::Schema {
                origin: origin.to_string(),
                line: line_no,
                message: format!("duplicate id `{}` (first seen on line {first})", record.id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn validate_record(record: &DatasetRecord) -> Result<(), String> {
    if record.id.trim().is_empty() {
        return Err("empty id".to_string());
    }
    if record.code.trim().is_empty() {
        return Err(format!("record `{}` has blank code", record.id));
    }
    if record.error_kinds.is_empty() {
        return Err(format!("record `{}` carries no error kinds", record.id));
    }
    if record.expected_fqns.is_some() && record.language != Language::JavaLike {
        return Err(format!(
            "record `{}` has expected_fqns but is not a Java-like record",
            record.id
        ));
    }
    Ok(())
}

/// The per-record result a report is computed from. Deliberately carries
/// no wall-clock timing, so identical runs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    #[serde(with = "language_name")]
    pub language: Language,
    pub carried: BTreeSet<ErrorKind>,
    pub status: ChainStatus,
    pub non_fqn_free: bool,
    pub syntax_free: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_fqns_matched: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_signature: Option<String>,
    #[serde(default)]
    pub ai_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl RecordOutcome {
    fn kind_resolved(&self, kind: ErrorKind) -> bool {
        match kind {
            ErrorKind::NonFqn => self.non_fqn_free,
            ErrorKind::LastMileSyntax => self.syntax_free,
        }
    }

    /// Every error kind the record originally carried is resolved.
    pub fn fully_resolved(&self) -> bool {
        self.carried.iter().all(|k| self.kind_resolved(*k))
    }
}

/// Load recorded per-record outcomes (line-delimited), e.g. to recompute
/// a stored table without model access.
pub fn load_outcomes(path: &Path) -> Result<Vec<RecordOutcome>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let origin = path.display().to_string();
    let mut outcomes = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let outcome: RecordOutcome =
            serde_json::from_str(line).map_err(|e| EvalError::Schema {
                origin: origin.clone(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// The three-metric report over one dataset and variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset_id: String,
    pub variant: Variant,
    pub style: PromptStyle,
    pub total: usize,
    /// `None` when no record carries the kind; rendered as `-`.
    pub resolved_non_fqns: Option<usize>,
    pub resolved_syntax: Option<usize>,
    pub all_resolved: usize,
    pub outcomes: Vec<RecordOutcome>,
}

impl EvalReport {
    pub fn from_outcomes(
        dataset_id: impl Into<String>,
        variant: Variant,
        style: PromptStyle,
        outcomes: Vec<RecordOutcome>,
    ) -> EvalReport {
        let (non_fqn, syntax, all) = compute_metrics(&outcomes);
        EvalReport {
            dataset_id: dataset_id.into(),
            variant,
            style,
            total: outcomes.len(),
            resolved_non_fqns: non_fqn,
            resolved_syntax: syntax,
            all_resolved: all,
            outcomes,
        }
    }

    /// Recompute every metric from the outcomes and check the stored
    /// values and invariants; reports verify themselves before they are
    /// trusted or written.
    pub fn audit(&self) -> Result<(), EvalError> {
        let (non_fqn, syntax, all) = compute_metrics(&self.outcomes);
        if self.total != self.outcomes.len() {
            return Err(EvalError::Audit(format!(
                "total {} != outcome count {}",
                self.total,
                self.outcomes.len()
            )));
        }
        if (self.resolved_non_fqns, self.resolved_syntax, self.all_resolved)
            != (non_fqn, syntax, all)
        {
            return Err(EvalError::Audit(format!(
                "stored metrics {:?}/{:?}/{} differ from recomputed {:?}/{:?}/{}",
                self.resolved_non_fqns,
                self.resolved_syntax,
                self.all_resolved,
                non_fqn,
                syntax,
                all
            )));
        }
        for (name, kind, value) in [
            ("resolved_non_fqns", ErrorKind::NonFqn, self.resolved_non_fqns),
            (
                "resolved_syntax",
                ErrorKind::LastMileSyntax,
                self.resolved_syntax,
            ),
        ] {
            if let Some(v) = value {
                if v > self.total {
                    return Err(EvalError::Audit(format!("{name} {v} exceeds total")));
                }
                // Among records carrying this kind, the fully resolved
                // ones are a subset of those that resolved the kind.
                let fully_resolved_carriers = self
                    .outcomes
                    .iter()
                    .filter(|o| o.carried.contains(&kind) && o.fully_resolved())
                    .count();
                if fully_resolved_carriers > v {
                    return Err(EvalError::Audit(format!(
                        "{fully_resolved_carriers} fully resolved carriers exceed {name} {v}"
                    )));
                }
            }
        }
        if self.all_resolved > self.total {
            return Err(EvalError::Audit("all_resolved exceeds total".to_string()));
        }
        Ok(())
    }

    /// The three metric cells in table order, `-` for inapplicable.
    pub fn metric_cells(&self) -> [String; 3] {
        [
            cell(self.resolved_non_fqns),
            cell(self.resolved_syntax),
            self.all_resolved.to_string(),
        ]
    }
}

fn cell(v: Option<usize>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "-".to_string(),
    }
}

fn compute_metrics(outcomes: &[RecordOutcome]) -> (Option<usize>, Option<usize>, usize) {
    let count_kind = |kind: ErrorKind| -> Option<usize> {
        let carriers: Vec<_> = outcomes
            .iter()
            .filter(|o| o.carried.contains(&kind))
            .collect();
        if carriers.is_empty() {
            return None;
        }
        Some(carriers.iter().filter(|o| o.kind_resolved(kind)).count())
    };
    let all = outcomes.iter().filter(|o| o.fully_resolved()).count();
    (
        count_kind(ErrorKind::NonFqn),
        count_kind(ErrorKind::LastMileSyntax),
        all,
    )
}

/// Harness knobs independent of the chain configuration.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Worker threads; clamped to the dataset size, minimum one.
    pub workers: usize,
    /// Compare final code against `expected_fqns` where present.
    pub check_gold_fqns: bool,
    /// Keep full per-record traces in the run result.
    pub keep_traces: bool,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions {
            workers: std::thread::available_parallelism()
                .map(|n| n.get().min(8))
                .unwrap_or(4),
            check_gold_fqns: false,
            keep_traces: false,
        }
    }
}

/// A finished evaluation: the self-audited report plus, when requested,
/// the trace of every record in dataset order.
#[derive(Debug, Clone)]
pub struct EvalRun {
    pub report: EvalReport,
    pub traces: Vec<ChainTrace>,
}

/// Run the configured variant over every record. Per-record failures
/// (backend or judge) become unresolved outcomes with the failure text
/// attached; they never abort the run. Outcomes keep dataset order
/// regardless of worker completion order.
pub fn evaluate(
    dataset_id: &str,
    records: &[DatasetRecord],
    runner: &ChainRunner,
    options: &EvalOptions,
) -> Result<EvalRun, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset(dataset_id.to_string()));
    }
    let workers = options.workers.clamp(1, records.len());
    let slots: Mutex<Vec<Option<(RecordOutcome, ChainTrace)>>> =
        Mutex::new(vec![None; records.len()]);
    let cursor = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::Relaxed);
                if idx >= records.len() {
                    break;
                }
                let result = evaluate_one(&records[idx], runner, options);
                slots.lock().expect("no poisoned slot lock")[idx] = Some(result);
            });
        }
    });

    let mut outcomes = Vec::with_capacity(records.len());
    let mut traces = Vec::new();
    for slot in slots.into_inner().expect("no poisoned slot lock") {
        let (outcome, trace) = slot.expect("every slot filled");
        outcomes.push(outcome);
        if options.keep_traces {
            traces.push(trace);
        }
    }
    let report = EvalReport::from_outcomes(
        dataset_id,
        runner.config().variant,
        runner.config().prompt_style,
        outcomes,
    );
    report.audit()?;
    Ok(EvalRun { report, traces })
}

fn evaluate_one(
    record: &DatasetRecord,
    runner: &ChainRunner,
    options: &EvalOptions,
) -> (RecordOutcome, ChainTrace) {
    let snippet = record.snippet();
    let (status, non_fqn_free, syntax_free, gold, trace, ai_steps, failure) =
        match runner.run_chain(&snippet) {
            Ok(result) => {
                let (nf, sf) = match result.final_judge.as_ref() {
                    Some(report) => {
                        let rs = resolution_status(report);
                        (rs.non_fqn_free, rs.syntax_free)
                    }
                    None => (false, false),
                };
                let gold = if options.check_gold_fqns {
                    record
                        .expected_fqns
                        .as_ref()
                        .map(|golds| gold_fqns_satisfied(&result.final_code, golds))
                } else {
                    None
                };
                let ai = result.trace.ai_steps();
                (result.status, nf, sf, gold, result.trace, ai, result.failure)
            }
            Err(err) => (
                ChainStatus::BackendError,
                false,
                false,
                None,
                ChainTrace::new(&record.id),
                0,
                Some(err.to_string()),
            ),
        };
    let outcome = RecordOutcome {
        id: record.id.clone(),
        language: record.language,
        carried: record.error_kinds.clone(),
        status,
        non_fqn_free,
        syntax_free,
        gold_fqns_matched: gold,
        trace_signature: Some(trace.signature()),
        ai_steps,
        failure,
    };
    (outcome, trace)
}

/// A gold mapping is satisfied when the final code imports the FQN or
/// uses it fully qualified.
fn gold_fqns_satisfied(code: &str, golds: &[GoldFqn]) -> bool {
    golds.iter().all(|g| {
        code.lines()
            .any(|l| l.trim() == format!("import {};", g.fqn))
            || code.contains(&g.fqn)
    })
}

/// Evaluate all four variants over the same dataset, in the fixed order
/// Chain, Direct, CoT, ChainNoEme. `make_runner` turns each per-variant
/// configuration into a runner, which is where tests inject transports.
pub fn run_ablation(
    dataset_id: &str,
    records: &[DatasetRecord],
    base: &ChainConfig,
    make_runner: &dyn Fn(ChainConfig) -> Result<ChainRunner, ChainError>,
    options: &EvalOptions,
) -> Result<Vec<EvalRun>, EvalError> {
    let mut runs = Vec::with_capacity(Variant::ALL.len());
    for variant in Variant::ALL {
        let config = ChainConfig {
            variant,
            ..base.clone()
        };
        let runner = make_runner(config)?;
        runs.push(evaluate(dataset_id, records, &runner, options)?);
    }
    Ok(runs)
}

/// The sensitivity sweep: a base style plus single-factor deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub base: PromptStyle,
    pub variants: Vec<(String, PromptStyle)>,
}

impl SensitivityGrid {
    /// The four single-factor rows of the standard sweep, against any
    /// base style.
    pub fn standard(base: PromptStyle) -> SensitivityGrid {
        SensitivityGrid {
            base,
            variants: vec![
                (
                    "Not Provided".to_string(),
                    PromptStyle {
                        include_task_description: !base.include_task_description,
                        ..base
                    },
                ),
                (
                    "Similar First".to_string(),
                    PromptStyle {
                        example_order: ExampleOrder::SimilarFirst,
                        ..base
                    },
                ),
                (
                    "Dissimilar First".to_string(),
                    PromptStyle {
                        example_order: ExampleOrder::DissimilarFirst,
                        ..base
                    },
                ),
                (
                    "Semi-Structured".to_string(),
                    PromptStyle {
                        representation: Representation::SemiStructured,
                        ..base
                    },
                ),
            ],
        }
    }

    /// Every variant must differ from the base in exactly one factor.
    pub fn validate(&self) -> Result<(), EvalError> {
        for (label, style) in &self.variants {
            let d = style.factor_distance(&self.base);
            if d != 1 {
                return Err(EvalError::Grid(format!(
                    "variant `{label}` differs from base in {d} factors, not 1"
                )));
            }
        }
        Ok(())
    }
}

/// One sweep row: metric deltas of the variant against the base run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub label: String,
    pub style: PromptStyle,
    /// Deltas in metric order (non-FQNs, syntax, all); `None` when the
    /// metric is inapplicable on this dataset.
    pub non_fqn_delta: Option<i64>,
    pub syntax_delta: Option<i64>,
    pub all_delta: i64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub base: EvalReport,
    pub rows: Vec<SensitivityRow>,
}

/// Evaluate the base style, then each grid variant, and report signed
/// metric deltas against the base.
pub fn run_sensitivity(
    dataset_id: &str,
    records: &[DatasetRecord],
    grid: &SensitivityGrid,
    base_config: &ChainConfig,
    make_runner: &dyn Fn(ChainConfig) -> Result<ChainRunner, ChainError>,
    options: &EvalOptions,
) -> Result<SensitivityReport, EvalError> {
    grid.validate()?;
    let run_style = |style: PromptStyle| -> Result<EvalReport, EvalError> {
        let config = ChainConfig {
            prompt_style: style,
            ..base_config.clone()
        };
        let runner = make_runner(config)?;
        Ok(evaluate(dataset_id, records, &runner, options)?.report)
    };

    let base = run_style(grid.base)?;
    let mut rows = Vec::with_capacity(grid.variants.len());
    for (label, style) in &grid.variants {
        let report = run_style(*style)?;
        rows.push(SensitivityRow {
            label: label.clone(),
            style: *style,
            non_fqn_delta: delta(base.resolved_non_fqns, report.resolved_non_fqns),
            syntax_delta: delta(base.resolved_syntax, report.resolved_syntax),
            all_delta: report.all_resolved as i64 - base.all_resolved as i64,
            report,
        });
    }
    Ok(SensitivityReport { base, rows })
}

fn delta(base: Option<usize>, variant: Option<usize>) -> Option<i64> {
    match (base, variant) {
        (Some(b), Some(v)) => Some(v as i64 - b as i64),
        _ => None,
    }
}

const METRIC_HEADERS: [&str; 3] = [
    "Resolved Non-FQNs",
    "Resolved Last-mile Syntax Errors",
    "All Resolved",
];

/// One aligned table over several labelled reports (one row per report),
/// with `-` in inapplicable cells.
pub fn render_report_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut table: Vec<[String; 4]> = Vec::with_capacity(rows.len() + 1);
    table.push([
        "Run".to_string(),
        METRIC_HEADERS[0].to_string(),
        METRIC_HEADERS[1].to_string(),
        METRIC_HEADERS[2].to_string(),
    ]);
    for (label, report) in rows {
        let cells = report.metric_cells();
        table.push([
            label.to_string(),
            cells[0].clone(),
            cells[1].clone(),
            cells[2].clone(),
        ]);
    }
    render_aligned(&table)
}

/// The sweep table: the base row shows absolute counts, every variant row
/// shows signed deltas against it.
pub fn render_sensitivity_table(report: &SensitivityReport) -> String {
    let mut table: Vec<[String; 4]> = Vec::new();
    table.push([
        "Variant".to_string(),
        METRIC_HEADERS[0].to_string(),
        METRIC_HEADERS[1].to_string(),
        METRIC_HEADERS[2].to_string(),
    ]);
    let base_cells = report.base.metric_cells();
    table.push([
        "Basic Config".to_string(),
        base_cells[0].clone(),
        base_cells[1].clone(),
        base_cells[2].clone(),
    ]);
    for row in &report.rows {
        table.push([
            row.label.clone(),
            signed_cell(row.non_fqn_delta),
            signed_cell(row.syntax_delta),
            signed_cell(Some(row.all_delta)),
        ]);
    }
    render_aligned(&table)
}

fn signed_cell(delta: Option<i64>) -> String {
    match delta {
        None => "-".to_string(),
        Some(d) if d > 0 => format!("+{d}"),
        Some(d) => d.to_string(),
    }
}

fn render_aligned(rows: &[[String; 4]]) -> String {
    let mut widths = [0usize; 4];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{:<width$}", cell, width = widths[j]);
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
        if i == 0 {
            for (j, w) in widths.iter().enumerate() {
                if j > 0 {
                    out.push_str("  ");
                }
                out.push_str(&"-".repeat(*w));
            }
            out.push('\n');
        }
    }
    out
}

/// Write `report.json`, `report.txt` and, when traces were kept,
/// `traces/<record-id>.json` under `<dir>/<dataset>/<variant>/`. Returns
/// the run directory.
pub fn write_run_artifacts(dir: &Path, run: &EvalRun) -> Result<PathBuf, EvalError> {
    let run_dir = dir
        .join(&run.report.dataset_id)
        .join(run.report.variant.slug());
    let io_err = |path: &Path, source: std::io::Error| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(&run_dir).map_err(|e| io_err(&run_dir, e))?;

    let json_path = run_dir.join("report.json");
    let json = serde_json::to_string_pretty(&run.report).expect("report serializes");
    fs::write(&json_path, json).map_err(|e| io_err(&json_path, e))?;

    let txt_path = run_dir.join("report.txt");
    let label = format!("{}/{}", run.report.dataset_id, run.report.variant);
    let table = render_report_table(&[(label.as_str(), &run.report)]);
    fs::write(&txt_path, table).map_err(|e| io_err(&txt_path, e))?;

    if !run.traces.is_empty() {
        let trace_dir = run_dir.join("traces");
        fs::create_dir_all(&trace_dir).map_err(|e| io_err(&trace_dir, e))?;
        for trace in &run.traces {
            let path = trace_dir.join(format!("{}.json", trace.snippet_id));
            let body = serde_json::to_string_pretty(trace).expect("trace serializes");
            fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(run_dir)
}
