//! `annoclean synth`: dataset construction.

use std::path::PathBuf;

use annoclean_core::datagen::{
    build_dataset, generate_clean_dir, split, BuildOptions, CleanImageConfig,
};
use annoclean_core::synth::load_stamp_library;
use annoclean_core::{Error, Result};
use clap::Args;

use crate::config::{CleanSource, ExperimentConfig};

#[derive(Args)]
pub struct SynthArgs {
    /// Experiment configuration (TOML).
    #[arg(short = 'c', long)]
    pub config: PathBuf,
    /// Output dataset directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides ANNOCLEAN_SEED and the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overwrite an existing output directory.
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let ds = &cfg.dataset;
    let seed = crate::resolve_seed(args.seed, ds.seed)?;
    let out_dir = args.out.unwrap_or_else(|| ds.out_dir.clone());

    if out_dir.exists()
        && std::fs::read_dir(&out_dir)
            .map_err(|e| Error::io(&out_dir, e))?
            .next()
            .is_some()
        && !args.force
    {
        return Err(Error::Collision { path: out_dir });
    }

    let clean_dir = match ds.clean_source {
        CleanSource::Dir => ds.clean_dir.clone().ok_or_else(|| {
            Error::config("dataset.clean_source = \"dir\" requires dataset.clean_dir")
        })?,
        CleanSource::Procedural => {
            let name = out_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            let dir = out_dir
                .parent()
                .unwrap_or_else(|| std::path::Path::new("."))
                .join(format!("{name}_clean_src"));
            let clean_cfg = CleanImageConfig {
                height: ds.clean_height,
                width: ds.clean_width,
                max_brightness: 0.90,
            };
            generate_clean_dir(&clean_cfg, ds.n_clean, seed, &dir)?;
            dir
        }
    };

    let library = match &ds.stamp_dir {
        Some(dir) => Some(load_stamp_library(dir)?),
        None => None,
    };
    let options = BuildOptions {
        force: args.force,
        synth: Default::default(),
        library,
    };
    let mut manifest = build_dataset(&clean_dir, ds.kind, ds.n_pairs, seed, &out_dir, &options)?;
    split(&mut manifest, ds.split.into(), seed)?;
    manifest.save(&out_dir)?;

    println!("manifest: {}", out_dir.join("manifest.json").display());
    println!(
        "records: {} ({} clean groups, kind {})",
        manifest.records.len(),
        manifest.clean_groups().len(),
        manifest.annotation_kind
    );
    for (name, ids) in &manifest.splits {
        println!("split {name}: {} records", ids.len());
    }
    let s = &manifest.channel_stats;
    println!(
        "channel stats: mean [{:.4}, {:.4}, {:.4}] std [{:.4}, {:.4}, {:.4}]",
        s.mean[0], s.mean[1], s.mean[2], s.std[0], s.std[1], s.std[2]
    );
    Ok(())
}
