//! Configuration layering: config file < environment < command-line
//! flags. Each layer only touches the knobs it names; file sections
//! replace the corresponding section whole.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pcr_core::analysis::CompilerConfig;
use pcr_core::backend::{BackendSelector, CompletionParams, ENV_MODEL};
use pcr_core::chain::{ChainConfig, Variant};
use pcr_core::prompt::{ExampleOrder, PromptStyle, Representation};
use serde::Deserialize;

use crate::{BackendMode, GlobalArgs, OnOff};

/// The config-file schema. Every section is optional; present sections
/// replace the defaults wholesale. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    variant: Option<Variant>,
    max_repair_rounds: Option<u32>,
    prompt_style: Option<PromptStyle>,
    backend: Option<BackendSelector>,
    compiler: Option<CompilerConfig>,
    params: Option<CompletionParams>,
    eval: Option<EvalSection>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub workers: Option<usize>,
    pub check_gold_fqns: Option<bool>,
    pub keep_traces: Option<bool>,
}

/// Everything a command needs, after all three layers are applied.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub chain: ChainConfig,
    pub eval: EvalSection,
    pub workspace: PathBuf,
    pub verbose: bool,
}

/// `implied` is the backend mode a subcommand itself dictates (`record`
/// implies the record backend, `replay-verify` the replay backend), so a
/// bare `--store` works there. An explicit `--backend` still wins.
pub fn resolve(args: &GlobalArgs, implied: Option<BackendMode>) -> Result<ResolvedConfig> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };

    let mut chain = ChainConfig::default();
    if let Some(v) = file.variant {
        chain.variant = v;
    }
    if let Some(r) = file.max_repair_rounds {
        chain.max_repair_rounds = r;
    }
    if let Some(style) = file.prompt_style {
        chain.prompt_style = style;
    }
    if let Some(backend) = file.backend {
        chain.backend = backend;
    }
    if let Some(compiler) = file.compiler {
        chain.compiler = compiler;
    }
    if let Some(params) = file.params {
        chain.params = params;
    }

    // Environment layer: the model name. The API key and base URL are
    // read by the HTTP transport itself when a live backend is built.
    if let Ok(model) = std::env::var(ENV_MODEL) {
        if !model.is_empty() {
            chain.params.model_name = model;
        }
    }

    // Flag layer.
    if let Some(v) = args.variant {
        chain.variant = v;
    }
    if let Some(r) = args.rounds {
        chain.max_repair_rounds = r;
    }
    if let Some(model) = &args.model {
        chain.params.model_name = model.clone();
    }
    apply_style_flags(&mut chain.prompt_style, args);
    chain.backend = apply_backend_flags(
        chain.backend,
        args.backend.or(implied),
        args.store.clone(),
        args.cache.map(OnOff::as_bool),
    )?;

    chain
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;

    Ok(ResolvedConfig {
        chain,
        eval: file.eval.unwrap_or_default(),
        workspace: args.workspace.clone().unwrap_or_else(|| PathBuf::from(".")),
        verbose: args.verbose,
    })
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("config file {} is invalid", path.display()))
}

fn apply_style_flags(style: &mut PromptStyle, args: &GlobalArgs) {
    if let Some(flag) = args.task_description {
        style.include_task_description = flag.as_bool();
    }
    if let Some(order) = args.example_order {
        style.example_order = match order {
            crate::OrderFlag::Fixed => ExampleOrder::Fixed,
            crate::OrderFlag::SimilarFirst => ExampleOrder::SimilarFirst,
            crate::OrderFlag::DissimilarFirst => ExampleOrder::DissimilarFirst,
        };
    }
    if let Some(rep) = args.representation {
        style.representation = match rep {
            crate::RepresentationFlag::NaturalLanguage => Representation::NaturalLanguage,
            crate::RepresentationFlag::SemiStructured => Representation::SemiStructured,
        };
    }
}

/// Rebuild the backend selector from the mode/store/cache flags, keeping
/// whatever the current selector already carries for unset knobs.
fn apply_backend_flags(
    current: BackendSelector,
    mode: Option<BackendMode>,
    store_flag: Option<PathBuf>,
    cache_flag: Option<bool>,
) -> Result<BackendSelector> {
    let (current_cache, current_rpm, current_store) = match &current {
        BackendSelector::Live {
            cache,
            requests_per_minute,
        } => (*cache, *requests_per_minute, None),
        BackendSelector::Record {
            store,
            cache,
            requests_per_minute,
        } => (*cache, *requests_per_minute, Some(store.clone())),
        BackendSelector::Replay { store } => (true, None, Some(store.clone())),
    };
    let mode = match mode {
        Some(m) => m,
        None if store_flag.is_none() && cache_flag.is_none() => return Ok(current),
        None => match &current {
            BackendSelector::Live { .. } => BackendMode::Live,
            BackendSelector::Record { .. } => BackendMode::Record,
            BackendSelector::Replay { .. } => BackendMode::Replay,
        },
    };
    let cache = cache_flag.unwrap_or(current_cache);
    let store = store_flag.or(current_store);
    Ok(match mode {
        BackendMode::Live => BackendSelector::Live {
            cache,
            requests_per_minute: current_rpm,
        },
        BackendMode::Record => BackendSelector::Record {
            store: required_store(store, "record")?,
            cache,
            requests_per_minute: current_rpm,
        },
        BackendMode::Replay => BackendSelector::Replay {
            store: required_store(store, "replay")?,
        },
    })
}

fn required_store(store: Option<PathBuf>, mode: &str) -> Result<PathBuf> {
    match store {
        Some(s) => Ok(s),
        None => bail!("the {mode} backend needs a store file; pass --store or set backend.store"),
    }
}
