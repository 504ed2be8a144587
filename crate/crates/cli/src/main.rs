//! `annoclean`: drive the annotation-removal pipeline.
//!
//! Subcommands: `synth` builds a paired noisy dataset, `train` runs one or
//! a matrix of training runs, `eval` scores a checkpoint on a split,
//! `losscurves` summarizes convergence and renders the comparison plot,
//! `compare` evaluates several checkpoints into one table.
//!
//! Exit codes are stable for scripting: 0 success, 2 bad input or
//! configuration, 3 output collision, 4 runtime failure.

mod commands;
mod config;
mod font;
mod plot;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "annoclean", version, about = "Self-supervised annotation removal pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a paired noisy dataset with manifest and splits.
    Synth(commands::synth::SynthArgs),
    /// Train one run or a scheme/loss/normalization matrix of runs.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint or stub restorer on a dataset split.
    Eval(commands::eval::EvalArgs),
    /// Summarize convergence steps and plot loss curves.
    Losscurves(commands::losscurves::LosscurvesArgs),
    /// Evaluate several checkpoints into one comparison table.
    Compare(commands::compare::CompareArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Losscurves(args) => commands::losscurves::run(args),
        Command::Compare(args) => commands::compare::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &annoclean_core::Error) -> i32 {
    use annoclean_core::Error::*;
    match err {
        Config(_) | Validation(_) | Image { .. } | UnknownArchitecture { .. }
        | ShapeMismatch { .. } => 2,
        Collision { .. } => 3,
        Io { .. } | NonFiniteLoss { .. } | Runtime(_) => 4,
    }
}

/// Master-seed resolution: CLI flag, then `ANNOCLEAN_SEED`, then the config.
pub(crate) fn resolve_seed(
    flag: Option<u64>,
    config_seed: u64,
) -> annoclean_core::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("ANNOCLEAN_SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            annoclean_core::Error::config(format!(
                "ANNOCLEAN_SEED must be an unsigned integer, got `{text}`"
            ))
        }),
        Err(_) => Ok(config_seed),
    }
}
