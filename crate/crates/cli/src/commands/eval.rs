//! `annoclean eval`: score a restorer on a dataset split.

use std::path::{Path, PathBuf};

use annoclean_core::datagen::{ChannelStats, DatasetManifest, NormalizationMode};
use annoclean_core::metrics::{
    evaluate, format_table, EvalOptions, IdentityRestorer, PerfectRestorer, ReportRow, Restorer,
    CSV_HEADER,
};
use annoclean_core::model::{PaddingPolicy, TrainedModel};
use annoclean_core::train::load_checkpoint;
use annoclean_core::{Error, Image, Result};
use clap::Args;
use ndarray::Axis;

use crate::config::{display_method, display_mode, parse_normalization, ExperimentConfig};

#[derive(Args)]
pub struct EvalArgs {
    /// Dataset root (the directory containing manifest.json).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Checkpoint to evaluate (omit when using --oracle).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Stub restorer for harness self-tests: `perfect` or `identity`.
    #[arg(long, value_parser = ["perfect", "identity"])]
    pub oracle: Option<String>,
    /// Split to evaluate.
    #[arg(long)]
    pub split: Option<String>,
    /// Difference-segmentation threshold.
    #[arg(long)]
    pub tau: Option<f32>,
    /// Optional experiment config supplying eval defaults.
    #[arg(short = 'c', long)]
    pub config: Option<PathBuf>,
    /// Output directory for report.csv / report.txt; defaults to the
    /// checkpoint's directory (or the working directory for stubs).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a trained network over single images, handling normalization and
/// the padding policy.
pub struct ModelRestorer {
    pub model: TrainedModel,
    pub stats: ChannelStats,
    pub normalization: NormalizationMode,
}

impl Restorer for ModelRestorer {
    fn restore(&self, noisy: &Image, _clean: &Image) -> Result<Image> {
        let (h, w) = noisy.dims();
        let mut data = noisy.pixels().clone();
        self.normalization.apply(&self.stats, &mut data);
        // HWC -> NCHW
        let mut batch = ndarray::Array4::zeros((1, 3, h, w));
        for c in 0..3 {
            for i in 0..h {
                for j in 0..w {
                    batch[(0, c, i, j)] = data[(i, j, c)];
                }
            }
        }
        let out = self.model.forward(&batch, PaddingPolicy::ReflectPad, false)?;
        let out = out.index_axis(Axis(0), 0);
        let mut hwc = ndarray::Array3::zeros((h, w, 3));
        for c in 0..3 {
            for i in 0..h {
                for j in 0..w {
                    hwc[(i, j, c)] = out[(c, i, j)];
                }
            }
        }
        self.normalization.invert(&self.stats, &mut hwc);
        hwc.mapv_inplace(|v| v.clamp(0.0, 1.0));
        Image::new(hwc)
    }

    fn label(&self) -> String {
        format!(
            "{}[{} {} {}]",
            self.model.net.arch_name(),
            self.model.meta.scheme,
            self.model.meta.loss,
            self.model.meta.normalization
        )
    }
}

pub fn run(args: EvalArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => Some(ExperimentConfig::load(path)?),
        None => None,
    };
    let split = args
        .split
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.eval.split.clone()))
        .unwrap_or_else(|| "test".into());
    let tau = args
        .tau
        .or_else(|| cfg.as_ref().map(|c| c.eval.tau))
        .unwrap_or(annoclean_core::metrics::DEFAULT_TAU);

    let manifest = DatasetManifest::load(&args.manifest)?;
    let row = evaluate_target(&args, &manifest, &split, tau)?;

    let out_dir = args.out.clone().unwrap_or_else(|| {
        args.checkpoint
            .as_ref()
            .and_then(|p| p.parent().map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("."))
    });
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_reports(&out_dir, &split, std::slice::from_ref(&row))?;

    print!("{}", format_table(std::slice::from_ref(&row)));
    println!(
        "n_samples: {}  fingerprint: {}",
        row.report.n_samples, row.report.config_fingerprint
    );
    Ok(())
}

/// Evaluate whichever restorer the arguments select.
pub fn evaluate_target(
    args: &EvalArgs,
    manifest: &DatasetManifest,
    split: &str,
    tau: f32,
) -> Result<ReportRow> {
    let options = EvalOptions { tau };
    match (&args.checkpoint, &args.oracle) {
        (Some(ckpt), None) => {
            let model = load_checkpoint(ckpt)?;
            let normalization = if model.meta.normalization.is_empty() {
                NormalizationMode::Linear
            } else {
                parse_normalization(&model.meta.normalization)?
            };
            let method = display_method(model.net.arch_name());
            let mode = display_mode(&model.meta.scheme, &model.meta.normalization);
            let restorer = ModelRestorer {
                model,
                stats: manifest.channel_stats.clone(),
                normalization,
            };
            let report = evaluate(&restorer, manifest, &args.manifest, split, &options)?;
            Ok(ReportRow {
                method,
                mode,
                report,
            })
        }
        (None, Some(oracle)) => {
            let (restorer, method): (Box<dyn Restorer>, &str) = match oracle.as_str() {
                "perfect" => (Box::new(PerfectRestorer), "Oracle (clean)"),
                "identity" => (Box::new(IdentityRestorer), "Identity (no-op)"),
                other => {
                    return Err(Error::config(format!(
                        "unknown oracle `{other}` (expected perfect or identity)"
                    )))
                }
            };
            let report = evaluate(restorer.as_ref(), manifest, &args.manifest, split, &options)?;
            Ok(ReportRow {
                method: method.to_string(),
                mode: "-".into(),
                report,
            })
        }
        (Some(_), Some(_)) => Err(Error::config(
            "--checkpoint and --oracle are mutually exclusive",
        )),
        (None, None) => Err(Error::config(
            "one of --checkpoint or --oracle is required",
        )),
    }
}

/// Write `report_<split>.csv` and `report_<split>.txt`.
pub fn write_reports(out_dir: &Path, split: &str, rows: &[ReportRow]) -> Result<()> {
    let csv_path = out_dir.join(format!("report_{split}.csv"));
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    let txt_path = out_dir.join(format!("report_{split}.txt"));
    std::fs::write(&txt_path, format_table(rows)).map_err(|e| Error::io(&txt_path, e))
}
