//! `pcr` — make partial code compilable.
//!
//! Subcommands: `fix` repairs one snippet end to end, `unit` runs a
//! single AI unit, `eval` scores a dataset (optionally across ablation
//! variants or the prompt-style sweep), `record` captures live responses
//! into a replay store, and `replay-verify` proves a store replays
//! deterministically.
//!
//! Exit codes: 0 on success (for `fix`, the code became compilable),
//! 1 when the repair ran but errors remain, 2 on configuration,
//! toolchain, or backend-environment failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcr_core::chain::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "pcr",
    version,
    about = "Repair partial code until it compiles, via an AI chain"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file; environment and flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Backend mode.
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendMode>,

    /// Prompt/response store for the record and replay backends.
    #[arg(long, global = true, value_name = "FILE")]
    pub store: Option<PathBuf>,

    /// In-process response cache for live calls.
    #[arg(long, global = true, value_enum, value_name = "on|off")]
    pub cache: Option<OnOff>,

    /// Model name sent to the provider (overrides config and PCR_MODEL).
    #[arg(long, global = true)]
    pub model: Option<String>,

    /// Repair strategy: chain, direct, cot, or chain-no-eme.
    #[arg(long, global = true, value_parser = parse_variant)]
    pub variant: Option<Variant>,

    /// Maximum judge-enhance-fix rounds.
    #[arg(long, global = true, value_name = "N")]
    pub rounds: Option<u32>,

    /// Snippet language (java or python); required for stdin input.
    #[arg(long, global = true)]
    pub lang: Option<String>,

    /// Write the chain trace of a `fix` run to this file as JSON.
    #[arg(long, global = true, value_name = "FILE")]
    pub trace: Option<PathBuf>,

    /// Include the task description in prompts.
    #[arg(long, global = true, value_enum, value_name = "on|off")]
    pub task_description: Option<OnOff>,

    /// Ordering of the five prompt examples.
    #[arg(long, global = true, value_enum)]
    pub example_order: Option<OrderFlag>,

    /// Prompt layout.
    #[arg(long, global = true, value_enum)]
    pub representation: Option<RepresentationFlag>,

    /// Base directory for run artifacts (defaults to the current one).
    #[arg(long, global = true, value_name = "DIR")]
    pub workspace: Option<PathBuf>,

    /// Debug logging on stderr, plus the fully resolved configuration.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendMode {
    Live,
    Record,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn as_bool(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderFlag {
    Fixed,
    SimilarFirst,
    DissimilarFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepresentationFlag {
    NaturalLanguage,
    SemiStructured,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s)
        .ok_or_else(|| format!("unknown variant `{s}`; expected chain, direct, cot, or chain-no-eme"))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Repair one snippet (file or stdin) and print the result.
    Fix(FixArgs),
    /// Run a single AI unit and print its parsed output.
    Unit(UnitArgs),
    /// Score a dataset and write report artifacts.
    Eval(EvalArgs),
    /// Run a dataset against the live provider, recording every response
    /// into a replay store.
    Record(RecordArgs),
    /// Evaluate a dataset twice from a replay store and check the
    /// reports are byte-identical.
    ReplayVerify(ReplayVerifyArgs),
}

#[derive(Debug, Args)]
struct FixArgs {
    /// Input file, or `-` for stdin.
    #[arg(value_name = "INPUT", default_value = "-")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct UnitArgs {
    /// simplename-extraction, simplename-to-fqn, error-message-enhance,
    /// or code-fix.
    #[arg(value_name = "UNIT")]
    name: String,

    /// Code input file, or `-` for stdin.
    #[arg(value_name = "INPUT", default_value = "-")]
    input: PathBuf,

    /// Comma-separated simple names (simplename-to-fqn).
    #[arg(long, value_name = "NAMES")]
    simple_names: Option<String>,

    /// Compiler message to explain (error-message-enhance).
    #[arg(long, value_name = "TEXT")]
    error_message: Option<String>,

    /// Error explanation guiding the fix (code-fix). Without it the unit
    /// has nothing to repair and echoes the input.
    #[arg(long, value_name = "TEXT")]
    explanation: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Dataset file: one JSON record per line.
    #[arg(value_name = "DATASET")]
    dataset: PathBuf,

    /// Report label; defaults to the dataset file stem.
    #[arg(long, value_name = "ID")]
    dataset_id: Option<String>,

    /// Artifact directory; defaults to <workspace>/runs.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for the run.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Run all four variants and print one row per variant.
    #[arg(long, conflicts_with = "sweep")]
    ablation: bool,

    /// Run the prompt-style sensitivity grid and print signed deltas.
    #[arg(long)]
    sweep: bool,

    /// Check final code against each record's expected qualified names.
    #[arg(long)]
    gold: bool,

    /// Keep per-record traces and write them with the artifacts.
    #[arg(long)]
    keep_traces: bool,
}

#[derive(Debug, Args)]
struct RecordArgs {
    /// Dataset file: one JSON record per line.
    #[arg(value_name = "DATASET")]
    dataset: PathBuf,

    /// Report label; defaults to the dataset file stem.
    #[arg(long, value_name = "ID")]
    dataset_id: Option<String>,

    /// Worker threads for the run.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Record all four variants.
    #[arg(long, conflicts_with = "sweep")]
    ablation: bool,

    /// Record the prompt-style sensitivity grid.
    #[arg(long)]
    sweep: bool,
}

#[derive(Debug, Args)]
struct ReplayVerifyArgs {
    /// Dataset file: one JSON record per line.
    #[arg(value_name = "DATASET")]
    dataset: PathBuf,

    /// Report label; defaults to the dataset file stem.
    #[arg(long, value_name = "ID")]
    dataset_id: Option<String>,

    /// Worker threads for the two runs.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn init_logging(verbose: bool) {
    let default = if verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    // `record` and `replay-verify` are their own backend choice; a bare
    // `--store` is enough there. An explicit `--backend` still wins.
    let implied = match &cli.command {
        Command::Record(_) => Some(BackendMode::Record),
        Command::ReplayVerify(_) => Some(BackendMode::Replay),
        _ => None,
    };
    let resolved = config::resolve(&cli.global, implied)?;
    if resolved.verbose {
        let rendered = toml::to_string_pretty(&resolved.chain)
            .unwrap_or_else(|e| format!("<unprintable: {e}>"));
        eprintln!("resolved configuration:\n{rendered}");
    }
    match cli.command {
        Command::Fix(args) => commands::fix(&resolved, &cli.global, &args.input),
        Command::Unit(args) => commands::unit(&resolved, &args),
        Command::Eval(args) => commands::eval(&resolved, &args),
        Command::Record(args) => commands::record(&resolved, &args),
        Command::ReplayVerify(args) => commands::replay_verify(&resolved, &args),
    }
}
