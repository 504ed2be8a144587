//! `annoclean compare`: one table over several checkpoints.

use std::path::PathBuf;

use annoclean_core::datagen::DatasetManifest;
use annoclean_core::metrics::format_table;
use annoclean_core::{Error, Result};
use clap::Args;

use super::eval::{evaluate_target, write_reports, EvalArgs};

#[derive(Args)]
pub struct CompareArgs {
    /// Dataset root (the directory containing manifest.json).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Checkpoints to evaluate, in table order (repeat the flag).
    #[arg(long = "checkpoint", required = true, num_args = 1..)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub tau: Option<f32>,
    /// Output directory for the comparison report files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: CompareArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let tau = args.tau.unwrap_or(annoclean_core::metrics::DEFAULT_TAU);

    let mut rows = Vec::new();
    for ckpt in &args.checkpoints {
        let eval_args = EvalArgs {
            manifest: args.manifest.clone(),
            checkpoint: Some(ckpt.clone()),
            oracle: None,
            split: Some(args.split.clone()),
            tau: Some(tau),
            config: None,
            out: None,
        };
        rows.push(evaluate_target(&eval_args, &manifest, &args.split, tau)?);
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_reports(&args.out, &format!("compare_{}", args.split), &rows)?;
    print!("{}", format_table(&rows));
    Ok(())
}
