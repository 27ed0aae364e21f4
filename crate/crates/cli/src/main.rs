//! `mse`: parameter checklists, table searches, pipeline runs and
//! evaluations driven by a plain-text experiment config.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mse_core::pipeline::Mode;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::Context;

#[derive(Parser, Debug)]
#[command(name = "mse", version, about = "Multi-source extractor experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Replaces the config's `[eval] seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Replaces the config's `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Replaces the config's `[params] mode`.
    #[arg(long, global = true, value_name = "MODE")]
    mode: Option<Mode>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Derive parameters and print the constraint checklist.
    Params,
    /// Run the configured pipeline and evaluate it.
    Run,
    /// Search for extractor tables and write them to the output directory.
    Search,
    /// Evaluate configured tables and source files.
    Eval,
}

fn load(cli: &Cli) -> CliResult<(ExperimentConfig, Context)> {
    let path = cli
        .config
        .clone()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::read(&path)?;
    if let Some(seed) = cli.seed {
        cfg.eval.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.params.mode = mode;
    }
    // Relative paths in the config are relative to the config file.
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let out_dir = match &cli.out {
        Some(out) => out.clone(),
        None => base.join(&cfg.output.dir),
    };
    Ok((cfg, Context { base, out_dir }))
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    }
    let (cfg, ctx) = load(cli)?;
    match cli.command {
        Command::Params => commands::params(&cfg, &ctx),
        Command::Run => commands::run(&cfg, &ctx),
        Command::Search => commands::search(&cfg, &ctx),
        Command::Eval => commands::eval(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
