//! Split evaluation: run a restorer over every record of a split and
//! aggregate all five metrics.

use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{
    dice, extract_segmentation, iou, pixel_accuracy, psnr_hvs_m, ssim, BinaryMask, MetricReport,
    Stat, DEFAULT_TAU,
};
use crate::datagen::{load_sample, DatasetManifest, NormalizationMode};
use crate::error::{Error, Result};
use crate::synth::Image;

/// Anything that maps a noisy image back to a clean-looking one.
///
/// Inputs and outputs are linear `[0, 1]` images; implementations handle
/// their own normalization internally. The clean image is provided so test
/// harness stubs (the perfect-restoration oracle) can be expressed with the
/// same interface; real restorers must ignore it.
pub trait Restorer: Sync {
    fn restore(&self, noisy: &Image, clean: &Image) -> Result<Image>;

    /// Short label folded into the report fingerprint.
    fn label(&self) -> String;
}

/// Returns the input unchanged; the no-denoising baseline.
pub struct IdentityRestorer;

impl Restorer for IdentityRestorer {
    fn restore(&self, noisy: &Image, _clean: &Image) -> Result<Image> {
        Ok(noisy.clone())
    }

    fn label(&self) -> String {
        "identity".into()
    }
}

/// Returns the clean image: the perfect-restoration stub used to self-test
/// the evaluation harness end to end.
pub struct PerfectRestorer;

impl Restorer for PerfectRestorer {
    fn restore(&self, _noisy: &Image, clean: &Image) -> Result<Image> {
        Ok(clean.clone())
    }

    fn label(&self) -> String {
        "perfect_oracle".into()
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Difference-segmentation threshold.
    pub tau: f32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { tau: DEFAULT_TAU }
    }
}

/// Evaluate `restorer` on every record of `split`.
///
/// Per record: restore `noisy_a`, threshold the input/output difference
/// against `mask_a` (Dice, IoU, pixel accuracy) and compare the output with
/// the clean image (SSIM clamped to `[0, 1]`, PSNR-HVS-M reference-first).
/// Records evaluate in parallel; the aggregation order is fixed, so reports
/// are bit-reproducible.
pub fn evaluate(
    restorer: &dyn Restorer,
    manifest: &DatasetManifest,
    root: &Path,
    split: &str,
    options: &EvalOptions,
) -> Result<MetricReport> {
    let record_ids = manifest.split_records(split)?;
    if record_ids.is_empty() {
        return Err(Error::validation(format!("split `{split}` is empty")));
    }

    let per_record: Vec<[f64; 5]> = record_ids
        .par_iter()
        .map(|id| -> Result<[f64; 5]> {
            let sample = load_sample(manifest, root, id, NormalizationMode::Linear)?;
            let with_record = |e: Error| Error::runtime(format!("record {id}: {e}"));
            let noisy = Image::new(sample.noisy_a).map_err(with_record)?;
            let clean = Image::new(sample.clean).map_err(with_record)?;
            let output = restorer.restore(&noisy, &clean)?;

            let pred = extract_segmentation(&noisy, &output, options.tau)?;
            let truth = BinaryMask::new(sample.mask_a).map_err(with_record)?;
            Ok([
                dice(&pred, &truth)?,
                iou(&pred, &truth)?,
                pixel_accuracy(&pred, &truth)?,
                ssim(&output, &clean)?.clamp(0.0, 1.0),
                psnr_hvs_m(&clean, &output)?,
            ])
        })
        .collect::<Result<_>>()?;

    let column = |k: usize| -> Vec<f64> { per_record.iter().map(|r| r[k]).collect() };
    Ok(MetricReport {
        n_samples: per_record.len(),
        dice: Stat::from_values(&column(0)),
        iou: Stat::from_values(&column(1)),
        pa: Stat::from_values(&column(2)),
        ssim: Stat::from_values(&column(3)),
        psnr_hvs_m: Stat::from_values(&column(4)),
        config_fingerprint: fingerprint(manifest, split, options.tau, &restorer.label()),
    })
}

fn fingerprint(manifest: &DatasetManifest, split: &str, tau: f32, label: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(manifest.master_seed.to_le_bytes());
    hasher.update(manifest.annotation_kind.dir_name().as_bytes());
    hasher.update(split.as_bytes());
    hasher.update(tau.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
