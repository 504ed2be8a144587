//! `annoclean train`: run one training run or a matrix of them.
//!
//! Each run owns `runs/<run_id>/` containing a resolved config snapshot,
//! per-epoch checkpoints `epoch_<n>.ckpt` (with optimizer state, so runs
//! resume exactly) and the loss curve as `loss.csv`. A diverging run is
//! recorded in `FAILED.txt` and the rest of the matrix continues.

use std::path::{Path, PathBuf};

use annoclean_core::datagen::DatasetManifest;
use annoclean_core::model::build_model;
use annoclean_core::train::{
    load_checkpoint_full, save_checkpoint, train_resumed, BatchSource, LossCurve, ManifestSource,
    OptimizerState, TrainConfig,
};
use annoclean_core::{Error, Result};
use clap::Args;

use crate::config::{ExperimentConfig, RunPlan};

#[derive(Args)]
pub struct TrainArgs {
    /// Experiment configuration (TOML).
    #[arg(short = 'c', long)]
    pub config: PathBuf,
    /// Dataset root (the directory containing manifest.json).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving one subdirectory per run.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Run id override; only valid when the plan is a single run.
    #[arg(long)]
    pub run_id: Option<String>,
    /// Continue runs from their last checkpoint instead of failing on
    /// existing run directories.
    #[arg(long)]
    pub resume: bool,
    /// Training seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let mut plans = cfg.run_plans()?;
    if let Some(id) = &args.run_id {
        if plans.len() != 1 {
            return Err(Error::config(
                "--run-id applies only when the plan is a single run",
            ));
        }
        plans[0].run_id = id.clone();
    }
    if let Some(seed) = args.seed {
        for p in &mut plans {
            p.config.seed = seed;
        }
    }

    // Collisions are checked up front so a matrix never partially starts.
    for plan in &plans {
        let dir = args.out.join(&plan.run_id);
        if dir.exists() && !args.resume {
            return Err(Error::Collision { path: dir });
        }
    }

    let manifest = DatasetManifest::load(&args.manifest)?;

    let mut failures = Vec::new();
    for plan in &plans {
        let dir = args.out.join(&plan.run_id);
        match run_one(&cfg, plan, &manifest, &args.manifest, &dir, args.resume) {
            Ok(summary) => println!("{summary}"),
            Err(Error::NonFiniteLoss { step }) => {
                let note = format!("run {} diverged: non-finite loss at step {step}", plan.run_id);
                eprintln!("{note}");
                std::fs::write(dir.join("FAILED.txt"), format!("{note}\n"))
                    .map_err(|e| Error::io(dir.join("FAILED.txt"), e))?;
                failures.push(plan.run_id.clone());
            }
            Err(other) => return Err(other),
        }
    }
    if !failures.is_empty() {
        return Err(Error::runtime(format!(
            "{} of {} runs failed: {}",
            failures.len(),
            plans.len(),
            failures.join(", ")
        )));
    }
    Ok(())
}

fn run_one(
    cfg: &ExperimentConfig,
    plan: &RunPlan,
    manifest: &DatasetManifest,
    manifest_root: &Path,
    run_dir: &Path,
    resume: bool,
) -> Result<String> {
    std::fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
    snapshot_config(cfg, plan, run_dir)?;

    let source = ManifestSource::load(manifest, manifest_root, "train", plan.normalization)?;

    // Resume from the newest epoch checkpoint if present.
    let (model, opt_state, start_epoch, prior_curve) = match latest_checkpoint(run_dir)? {
        Some((epoch, path)) if resume => {
            let (model, state) = load_checkpoint_full(&path)?;
            let mut prior = load_prior_curve(run_dir)?;
            // Keep only rows from the epochs the checkpoint covers.
            let steps_per_epoch = source.len().div_ceil(plan.config.batch_size) as u64;
            prior.retain(|&(s, _)| s < epoch as u64 * steps_per_epoch);
            (model, state, epoch, prior)
        }
        _ => (
            build_model(&cfg.model, plan.config.seed)?,
            None,
            0,
            Vec::new(),
        ),
    };
    if start_epoch >= plan.config.epochs {
        return Ok(format!(
            "run {}: already complete at epoch {start_epoch}",
            plan.run_id
        ));
    }

    let run_dir_owned = run_dir.to_path_buf();
    let prior = prior_curve.clone();
    let config: TrainConfig = plan.config.clone();
    let mut hook = move |epoch: usize,
                         model: &annoclean_core::model::TrainedModel,
                         opt: &OptimizerState,
                         curve: &LossCurve|
          -> Result<()> {
        save_checkpoint(model, Some(opt), &run_dir_owned.join(format!("epoch_{epoch}.ckpt")))?;
        let mut merged = LossCurve {
            entries: prior.clone(),
            wall_clock_secs: curve.wall_clock_secs,
        };
        merged.entries.extend_from_slice(&curve.entries);
        merged.save_csv(&run_dir_owned.join("loss.csv"))
    };

    let output = train_resumed(
        model,
        opt_state.as_ref(),
        start_epoch,
        &source,
        &config,
        Some(&mut hook),
    )?;

    let mut merged = LossCurve {
        entries: prior_curve,
        wall_clock_secs: output.curve.wall_clock_secs,
    };
    merged.entries.extend_from_slice(&output.curve.entries);
    merged.save_csv(&run_dir.join("loss.csv"))?;

    let final_loss = merged.entries.last().map(|&(_, l)| l).unwrap_or(f64::NAN);
    Ok(format!(
        "run {}: {} steps, final loss {:.6}, {:.1}s (checkpoints in {})",
        plan.run_id,
        merged.entries.len(),
        final_loss,
        output.curve.wall_clock_secs,
        run_dir.display()
    ))
}

/// Snapshot the fully resolved configuration for this run.
fn snapshot_config(cfg: &ExperimentConfig, plan: &RunPlan, run_dir: &Path) -> Result<()> {
    let mut resolved = cfg.clone();
    resolved.matrix = None;
    resolved.train = Some(crate::config::TrainSection {
        scheme: plan.scheme.to_string(),
        loss: plan.loss.to_string(),
        batch_size: plan.config.batch_size,
        epochs: plan.config.epochs,
        max_steps: plan.config.max_steps,
        learning_rate: plan.config.optimizer.learning_rate,
        momentum: plan.config.optimizer.momentum,
        weight_decay: plan.config.optimizer.weight_decay,
        alpha: plan.config.optimizer.alpha,
        eps: plan.config.optimizer.eps,
        normalization: plan.normalization,
        seed: plan.config.seed,
    });
    let path = run_dir.join("config.toml");
    std::fs::write(&path, resolved.to_toml()?).map_err(|e| Error::io(&path, e))
}

/// Highest-numbered `epoch_<n>.ckpt` in a run directory.
fn latest_checkpoint(run_dir: &Path) -> Result<Option<(usize, PathBuf)>> {
    if !run_dir.is_dir() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in std::fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))? {
        let path = entry.map_err(|e| Error::io(run_dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(n) = name
            .strip_prefix("epoch_")
            .and_then(|rest| rest.strip_suffix(".ckpt"))
            .and_then(|num| num.parse::<usize>().ok())
        {
            if best.as_ref().is_none_or(|(b, _)| n > *b) {
                best = Some((n, path));
            }
        }
    }
    Ok(best)
}

/// Rows of an existing loss.csv, used to stitch resumed curves together.
fn load_prior_curve(run_dir: &Path) -> Result<Vec<(u64, f64)>> {
    let path = run_dir.join("loss.csv");
    if !path.is_file() {
        return Ok(Vec::new());
    }
    Ok(LossCurve::load_csv(&path)?.entries)
}
