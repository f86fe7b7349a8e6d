//! `folner`: runs experiment configs and writes CSV, JSON and SVG artifacts.
//!
//! Exit status: 0 on success, 2 when a cross-check finds a falsification
//! candidate, 1 on any error.

mod config;
mod output;
mod plot;
mod presets;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "folner", version, about = "Følner sequences, measure complexity and equicontinuity experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Følner defects and temperedness ratios.
    CheckTempered(RunArgs),
    /// Complexity profiles with a boundedness verdict.
    ProfileComplexity(RunArgs),
    /// Orbit net sizes of observables.
    ApTest(RunArgs),
    /// Mean equicontinuity moduli against complexity.
    Equicontinuity(RunArgs),
    /// Agreement report for one of the equivalences.
    VerifyTheorem(RunArgs),
    /// Names and descriptions of the shipped presets.
    ListPresets,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
    #[arg(long, value_name = "DIR", default_value = "folner-out")]
    out: PathBuf,
}

fn load(args: &RunArgs) -> Result<config::ExperimentConfig, String> {
    let text = match (&args.config, &args.preset) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
        (None, Some(name)) => presets::find(name)
            .ok_or_else(|| format!("unknown preset {name:?}; see list-presets"))?
            .text
            .to_string(),
        (None, None) => return Err("give --config or --preset".into()),
    };
    let mut cfg = config::parse(&text).map_err(|e| e.to_string())?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(verb: &str, args: &RunArgs) -> Result<bool, String> {
    let cfg = load(args)?;
    if cfg.task.verb() != verb {
        return Err(format!(
            "config error at $.task.kind: this config is for {}, not {verb}",
            cfg.task.verb()
        ));
    }
    if args.workers == 0 {
        return Err("--workers must be positive".into());
    }
    let art = folner_core::par::with_workers(args.workers, || run::run(&cfg)).map_err(|e| e.to_string())?;
    let files = output::write(&args.out, &cfg, &art).map_err(|e| format!("cannot write outputs: {e}"))?;
    for f in files {
        println!("wrote {}", f.display());
    }
    for key in ["verdict", "agree"] {
        if let Some(v) = art.summary.get(key) {
            println!("{key}: {v}");
        }
    }
    if art.falsification {
        println!("falsification candidate: yes");
    }
    Ok(art.falsification)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match &cli.verb {
        Verb::ListPresets => {
            for p in presets::PRESETS {
                let desc = serde_json::from_str::<serde_json::Value>(p.text)
                    .ok()
                    .and_then(|v| v["description"].as_str().map(str::to_string))
                    .unwrap_or_default();
                println!("{:<30} {desc}", p.name);
            }
            return ExitCode::SUCCESS;
        }
        Verb::CheckTempered(a) => ("check-tempered", a),
        Verb::ProfileComplexity(a) => ("profile-complexity", a),
        Verb::ApTest(a) => ("ap-test", a),
        Verb::Equicontinuity(a) => ("equicontinuity", a),
        Verb::VerifyTheorem(a) => ("verify-theorem", a),
    };
    match execute(verb, args) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
