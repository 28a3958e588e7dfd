//! `neb`: walk, train, evaluate, and estimate node embeddings.
//!
//! Usage: `neb <walk|train|eval|estimate|run> [--config FILE] [--KEY VALUE]...`
//! where KEY is any configuration key (`neb help` lists them). Flags
//! override the config file in the order given.

use anyhow::{bail, Result};

mod commands;
mod config;

use config::RunConfig;

const USAGE: &str = "usage: neb <command> [--config FILE] [--KEY VALUE]...

commands:
  walk      generate random-walk sample files for walk.epochs epochs
  train     train embeddings over the sample files (walking missing
            epochs concurrently); writes checkpoints and a timeline log
  eval      link-prediction AUC of the checkpoints on the held-out split
  estimate  memory and pipeline-time estimates for the configured sizes
  run       train end to end, then evaluate
  help      this text plus every configuration key

any configuration key doubles as a flag, e.g. --train.dim 96 --seed 7";

fn build_config(args: &[String]) -> Result<RunConfig> {
    // first pass: locate --config so later flags override the file
    let mut cfg = RunConfig::default();
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            let path = args
                .get(i + 1)
                .ok_or_else(|| anyhow::anyhow!("--config needs a path"))?;
            cfg = RunConfig::load(path)?;
        }
        i += 1;
    }
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| anyhow::anyhow!("expected a --flag, got {arg:?}"))?;
        let value = args
            .get(i + 1)
            .ok_or_else(|| anyhow::anyhow!("flag --{key} needs a value"))?;
        if key != "config" {
            cfg.set(key, value)
                .map_err(|e| anyhow::anyhow!("flag --{key}: {e}"))?;
        }
        i += 2;
    }
    Ok(cfg)
}

fn run() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        bail!("missing command\n{USAGE}");
    };
    let rest = &args[1..];
    match command.as_str() {
        "walk" => {
            let cfg = build_config(rest)?;
            let manifest = commands::cmd_walk(&cfg)?;
            println!("walk: manifest {}", manifest.display());
        }
        "train" => {
            let cfg = build_config(rest)?;
            commands::cmd_train(&cfg)?;
        }
        "eval" => {
            let cfg = build_config(rest)?;
            commands::cmd_eval(&cfg)?;
        }
        "estimate" => {
            let cfg = build_config(rest)?;
            commands::cmd_estimate(&cfg)?;
        }
        "run" => {
            let cfg = build_config(rest)?;
            commands::cmd_run(&cfg)?;
        }
        "help" | "--help" | "-h" => {
            println!("{USAGE}\n\nconfiguration keys (with defaults):");
            let defaults = RunConfig::default();
            for key in config::KEYS {
                println!("  {key}={}", defaults.get(key).unwrap());
            }
        }
        other => bail!("unknown command {other:?}\n{USAGE}"),
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        // single-line, machine-parsable failure reason
        let reason = format!("{e:#}").replace('\n', " | ");
        eprintln!("error: {reason}");
        std::process::exit(1);
    }
}
