//! The five subcommands. Everything here prints artifacts (code or
//! tables) on stdout and progress/diagnostics on stderr, and maps
//! failures to the documented exit codes.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pcr_core::backend::{BackendSelector, ReplayStore};
use pcr_core::chain::{ChainConfig, ChainRunner, ChainStatus};
use pcr_core::eval::{
    evaluate, load_dataset, render_report_table, render_sensitivity_table, run_ablation,
    run_sensitivity, write_run_artifacts, EvalOptions, EvalReport, SensitivityGrid,
};
use pcr_core::prompt::{parse_fixed_code, parse_fqn_mappings, parse_simple_names, UnitName};
use pcr_core::snippet::{CodeSnippet, Language};

use crate::config::ResolvedConfig;
use crate::{EvalArgs, GlobalArgs, RecordArgs, ReplayVerifyArgs, UnitArgs};

pub fn fix(resolved: &ResolvedConfig, global: &GlobalArgs, input: &Path) -> Result<u8> {
    let (source, id, detected) = read_input(input)?;
    let language = pick_language(global.lang.as_deref(), detected)?;
    let snippet = CodeSnippet::new(id, language, source.clone())?;
    let runner = ChainRunner::new(resolved.chain.clone())?;

    let initial = runner.toolchain().judge(&snippet)?;
    if initial.is_clean() {
        log::info!("input already compiles; nothing to repair");
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(source.as_bytes())?;
        stdout.flush()?;
        return Ok(0);
    }

    let result = runner.run_chain(&snippet)?;
    if let Some(path) = &global.trace {
        let body = serde_json::to_string_pretty(&result.trace)?;
        std::fs::write(path, body + "\n")
            .with_context(|| format!("cannot write trace {}", path.display()))?;
        log::info!("trace written to {}", path.display());
    }
    match result.status {
        ChainStatus::Compilable => {
            println!("{}", result.final_code);
            Ok(0)
        }
        ChainStatus::BackendError => {
            let message = result
                .failure
                .unwrap_or_else(|| "backend failure".to_string());
            bail!("{message}");
        }
        status => {
            println!("{}", result.final_code);
            eprintln!("unresolved: {}", describe_status(status));
            Ok(1)
        }
    }
}

fn describe_status(status: ChainStatus) -> &'static str {
    match status {
        ChainStatus::Compilable => "compilable",
        ChainStatus::NonFqnRemaining => "unresolved type names remain",
        ChainStatus::SyntaxRemaining => "syntax errors remain",
        ChainStatus::BothRemaining => "unresolved type names and syntax errors remain",
        ChainStatus::BackendError => "the backend failed",
    }
}

pub fn unit(resolved: &ResolvedConfig, args: &UnitArgs) -> Result<u8> {
    let unit = UnitName::parse(&args.name).ok_or_else(|| {
        anyhow!(
            "unknown unit `{}`; expected one of: {}",
            args.name,
            UnitName::ALL
                .iter()
                .map(|u| u.slug())
                .collect::<Vec<_>>()
                .join(", ")
        )
    })?;
    let (code, _, _) = read_input(&args.input)?;
    let runner = ChainRunner::new(resolved.chain.clone())?;
    let complete = |fields: &[(&str, &str)]| -> Result<String> {
        let prompt = runner.render_unit_prompt(unit, fields)?;
        Ok(runner.complete_prompt(prompt)?)
    };
    match unit {
        UnitName::SimplenameExtraction => {
            let response = complete(&[("code", &code)])?;
            for name in parse_simple_names(&response) {
                println!("{name}");
            }
        }
        UnitName::SimplenameToFqn => {
            let raw = args
                .simple_names
                .as_deref()
                .ok_or_else(|| anyhow!("simplename-to-fqn needs --simple-names"))?;
            let names: Vec<String> = raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            if names.is_empty() {
                bail!("--simple-names is empty");
            }
            let joined = names.join(", ");
            let response = complete(&[("code", &code), ("simple_names", &joined)])?;
            let parsed = parse_fqn_mappings(&response, &names);
            for mapping in &parsed.mappings {
                println!("{} -> {}", mapping.simple_name, mapping.fqn);
            }
            if !parsed.misses.is_empty() {
                eprintln!("no mapping returned for: {}", parsed.misses.join(", "));
            }
        }
        UnitName::ErrorMessageEnhance => {
            let message = args
                .error_message
                .as_deref()
                .ok_or_else(|| anyhow!("error-message-enhance needs --error-message"))?;
            let response = complete(&[("code", &code), ("error_message", message)])?;
            println!("{}", response.trim());
        }
        UnitName::CodeFix => match args.explanation.as_deref() {
            // Nothing diagnosed means nothing to fix; echo without a call.
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(code.as_bytes())?;
                stdout.flush()?;
            }
            Some(explanation) => {
                let response = complete(&[("code", &code), ("explanation", explanation)])?;
                println!("{}", parse_fixed_code(&response)?);
            }
        },
    }
    Ok(0)
}

pub fn eval(resolved: &ResolvedConfig, args: &EvalArgs) -> Result<u8> {
    let records = load_dataset(&args.dataset)?;
    let dataset_id = dataset_label(&args.dataset, &args.dataset_id);
    let options = eval_options(resolved, args.workers, args.gold, args.keep_traces);
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| resolved.workspace.join("runs"));
    let base = resolved.chain.clone();
    let make_runner = ChainRunner::new;

    if args.sweep {
        let grid = SensitivityGrid::standard(base.prompt_style);
        let report = run_sensitivity(&dataset_id, &records, &grid, &base, &make_runner, &options)?;
        harness_guard(&report.base)?;
        let dir = out_dir.join(&dataset_id);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        let table = render_sensitivity_table(&report);
        std::fs::write(
            dir.join("sensitivity.json"),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
        std::fs::write(dir.join("sensitivity.txt"), &table)?;
        eprintln!("wrote {}", dir.display());
        print!("{table}");
        return Ok(0);
    }

    if args.ablation {
        let runs = run_ablation(&dataset_id, &records, &base, &make_runner, &options)?;
        let mut rows = Vec::new();
        for run in &runs {
            harness_guard(&run.report)?;
            let path = write_run_artifacts(&out_dir, run)?;
            eprintln!("wrote {}", path.display());
            rows.push((run.report.variant.slug(), &run.report));
        }
        print!("{}", render_report_table(&rows));
        return Ok(0);
    }

    let runner = ChainRunner::new(base.clone())?;
    let run = evaluate(&dataset_id, &records, &runner, &options)?;
    harness_guard(&run.report)?;
    let path = write_run_artifacts(&out_dir, &run)?;
    eprintln!("wrote {}", path.display());
    print!(
        "{}",
        render_report_table(&[(run.report.variant.slug(), &run.report)])
    );
    Ok(0)
}

pub fn record(resolved: &ResolvedConfig, args: &RecordArgs) -> Result<u8> {
    let (backend, store_path) = match resolved.chain.backend.clone() {
        BackendSelector::Record {
            store,
            cache,
            requests_per_minute,
        } => (
            BackendSelector::Record {
                store: store.clone(),
                cache,
                requests_per_minute,
            },
            store,
        ),
        BackendSelector::Replay { store } => (
            BackendSelector::Record {
                store: store.clone(),
                cache: true,
                requests_per_minute: None,
            },
            store,
        ),
        BackendSelector::Live { .. } => {
            bail!("record needs a store file; pass --backend record --store FILE")
        }
    };
    let base = ChainConfig {
        backend,
        ..resolved.chain.clone()
    };
    let records = load_dataset(&args.dataset)?;
    let dataset_id = dataset_label(&args.dataset, &args.dataset_id);
    let options = eval_options(resolved, args.workers, false, false);
    let make_runner = ChainRunner::new;

    if args.sweep {
        let grid = SensitivityGrid::standard(base.prompt_style);
        let report = run_sensitivity(&dataset_id, &records, &grid, &base, &make_runner, &options)?;
        harness_guard(&report.base)?;
        print!("{}", render_sensitivity_table(&report));
    } else if args.ablation {
        let runs = run_ablation(&dataset_id, &records, &base, &make_runner, &options)?;
        let mut rows = Vec::new();
        for run in &runs {
            harness_guard(&run.report)?;
            rows.push((run.report.variant.slug(), &run.report));
        }
        print!("{}", render_report_table(&rows));
    } else {
        let runner = ChainRunner::new(base.clone())?;
        let run = evaluate(&dataset_id, &records, &runner, &options)?;
        harness_guard(&run.report)?;
        print!(
            "{}",
            render_report_table(&[(run.report.variant.slug(), &run.report)])
        );
    }

    if store_path.exists() {
        let store = ReplayStore::load(&store_path)?;
        eprintln!(
            "store {} holds {} prompts",
            store_path.display(),
            store.len()
        );
    } else {
        eprintln!("no prompts were recorded (no AI calls were needed)");
    }
    Ok(0)
}

pub fn replay_verify(resolved: &ResolvedConfig, args: &ReplayVerifyArgs) -> Result<u8> {
    let backend = match resolved.chain.backend.clone() {
        BackendSelector::Replay { store } => BackendSelector::Replay { store },
        BackendSelector::Record { store, .. } => BackendSelector::Replay { store },
        BackendSelector::Live { .. } => {
            bail!("replay-verify needs a store file; pass --backend replay --store FILE")
        }
    };
    let config = ChainConfig {
        backend,
        ..resolved.chain.clone()
    };
    let records = load_dataset(&args.dataset)?;
    let dataset_id = dataset_label(&args.dataset, &args.dataset_id);
    let options = eval_options(resolved, args.workers, false, false);

    // Two runs, each with a freshly loaded store. The replay backend is
    // built without any transport, so neither run can reach a network.
    let first = evaluate(
        &dataset_id,
        &records,
        &ChainRunner::new(config.clone())?,
        &options,
    )?;
    harness_guard(&first.report)?;
    let second = evaluate(&dataset_id, &records, &ChainRunner::new(config)?, &options)?;
    let a = serde_json::to_string_pretty(&first.report)?;
    let b = serde_json::to_string_pretty(&second.report)?;
    if a == b {
        println!(
            "replay verified: {} records, two runs produced byte-identical reports",
            first.report.total
        );
        Ok(0)
    } else {
        let line = a
            .lines()
            .zip(b.lines())
            .position(|(x, y)| x != y)
            .map(|i| i + 1)
            .unwrap_or(0);
        eprintln!("replay mismatch: serialized reports first differ at line {line}");
        Ok(1)
    }
}

fn eval_options(
    resolved: &ResolvedConfig,
    workers: Option<usize>,
    gold: bool,
    keep_traces: bool,
) -> EvalOptions {
    let mut options = EvalOptions::default();
    if let Some(w) = workers.or(resolved.eval.workers) {
        options.workers = w;
    }
    options.check_gold_fqns = gold || resolved.eval.check_gold_fqns.unwrap_or(false);
    options.keep_traces = keep_traces || resolved.eval.keep_traces.unwrap_or(false);
    options
}

fn dataset_label(path: &Path, flag: &Option<String>) -> String {
    flag.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    })
}

/// Metrics may legitimately be low, but a run where every single record
/// died in the backend is a harness problem (missing store, bad
/// credentials), not a result.
fn harness_guard(report: &EvalReport) -> Result<()> {
    if !report.outcomes.is_empty()
        && report
            .outcomes
            .iter()
            .all(|o| o.status == ChainStatus::BackendError)
    {
        let first = report
            .outcomes
            .first()
            .and_then(|o| o.failure.clone())
            .unwrap_or_else(|| "backend failure".to_string());
        bail!("every record failed in the backend; first failure: {first}");
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<(String, String, Option<Language>)> {
    if path == Path::new("-") {
        let mut source = String::new();
        std::io::stdin()
            .read_to_string(&mut source)
            .context("reading stdin")?;
        return Ok((source, "stdin".to_string(), None));
    }
    let source = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string());
    let detected = path
        .extension()
        .and_then(|e| e.to_str())
        .and_then(|ext| match ext {
            "java" => Some(Language::JavaLike),
            "py" => Some(Language::PythonLike),
            _ => None,
        });
    Ok((source, id, detected))
}

fn pick_language(flag: Option<&str>, detected: Option<Language>) -> Result<Language> {
    if let Some(name) = flag {
        return Language::parse(name)
            .ok_or_else(|| anyhow!("unknown language `{name}`; expected java or python"));
    }
    detected.ok_or_else(|| anyhow!("cannot infer the language; pass --lang java or --lang python"))
}
