//! Reproducible dataset construction.
//!
//! A dataset is a directory tree
//! `<out>/{clean,noisy_a,noisy_b,mask_a,mask_b}/<record_id>.png` plus a
//! `manifest.json` capturing seeds, file references, normalization
//! statistics and splits. Records are generated independently from seeds
//! derived off the master seed, so generation parallelizes and any record
//! can be reproduced in isolation.

mod build;
mod clean;
mod manifest;
mod split;
mod stats;

pub use build::{build_dataset, BuildOptions};
pub use clean::{generate_clean_dir, generate_clean_image, CleanImageConfig};
pub use manifest::{ChannelStats, DatasetManifest, RecordEntry, MANIFEST_FILE};
pub use split::{split, SplitFractions};
pub use stats::compute_channel_stats;

use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{load_mask_png, Image};

/// How image values are presented to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Identity on the stored `v / 255` scale.
    #[default]
    Linear,
    /// Per-channel standardization by the dataset's clean-image statistics:
    /// `v -> (v - mean_c) / max(std_c, 1e-6)`.
    Smn,
}

pub const SMN_EPSILON: f64 = 1e-6;

impl NormalizationMode {
    /// Normalize an (H, W, 3) image in place.
    pub fn apply(self, stats: &ChannelStats, data: &mut Array3<f32>) {
        if self == NormalizationMode::Linear {
            return;
        }
        for c in 0..3 {
            let mean = stats.mean[c] as f32;
            let std = stats.std[c].max(SMN_EPSILON) as f32;
            for v in data.slice_mut(ndarray::s![.., .., c]) {
                *v = (*v - mean) / std;
            }
        }
    }

    /// Invert [`NormalizationMode::apply`].
    pub fn invert(self, stats: &ChannelStats, data: &mut Array3<f32>) {
        if self == NormalizationMode::Linear {
            return;
        }
        for c in 0..3 {
            let mean = stats.mean[c] as f32;
            let std = stats.std[c].max(SMN_EPSILON) as f32;
            for v in data.slice_mut(ndarray::s![.., .., c]) {
                *v = *v * std + mean;
            }
        }
    }
}

impl std::fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormalizationMode::Linear => f.write_str("linear"),
            NormalizationMode::Smn => f.write_str("smn"),
        }
    }
}

/// One training record, loaded and normalized.
///
/// `noisy_a` is the model input, `noisy_b` the noisy-to-noisy target and
/// `clean` the noisy-to-clean target; the two masks are the noise supports
/// of the corresponding noisy images. Images are (H, W, 3) in the space
/// selected by `normalization`; masks are strictly {0, 1}.
#[derive(Debug, Clone)]
pub struct SampleTuple {
    pub record_id: String,
    pub noisy_a: Array3<f32>,
    pub noisy_b: Array3<f32>,
    pub clean: Array3<f32>,
    pub mask_a: Array2<u8>,
    pub mask_b: Array2<u8>,
    pub normalization: NormalizationMode,
}

/// Load one record from disk and normalize all three images identically.
pub fn load_sample(
    manifest: &DatasetManifest,
    root: &Path,
    record_id: &str,
    normalization: NormalizationMode,
) -> Result<SampleTuple> {
    let record = manifest.record(record_id)?;
    let load_image = |rel: &str| -> Result<Array3<f32>> {
        let path = root.join(rel);
        let img = Image::load_png(&path).map_err(|e| {
            Error::runtime(format!("record {record_id}: {e}"))
        })?;
        let mut data = img.pixels().clone();
        normalization.apply(&manifest.channel_stats, &mut data);
        Ok(data)
    };
    let load_mask = |rel: &str| -> Result<Array2<u8>> {
        let path = root.join(rel);
        load_mask_png(&path).map_err(|e| Error::runtime(format!("record {record_id}: {e}")))
    };
    Ok(SampleTuple {
        record_id: record_id.to_string(),
        noisy_a: load_image(&record.noisy_a_path)?,
        noisy_b: load_image(&record.noisy_b_path)?,
        clean: load_image(&record.clean_path)?,
        mask_a: load_mask(&record.mask_a_path)?,
        mask_b: load_mask(&record.mask_b_path)?,
        normalization,
    })
}

/// Dataset sizes used in the source experiments, kept as named presets so
/// full-scale runs are one flag away.
#[derive(Debug, Clone, Copy)]
pub struct ScalePreset {
    pub kind: crate::synth::AnnotationKind,
    pub clean_images: usize,
    pub n_pairs: usize,
}

pub const PAPER_SCALE_PRESETS: [ScalePreset; 3] = [
    ScalePreset {
        kind: crate::synth::AnnotationKind::BodyMarker,
        clean_images: 4_975,
        n_pairs: 83_900,
    },
    ScalePreset {
        kind: crate::synth::AnnotationKind::RadialLine,
        clean_images: 3_936,
        n_pairs: 80_000,
    },
    ScalePreset {
        kind: crate::synth::AnnotationKind::VascularFlow,
        clean_images: 250,
        n_pairs: 80_000,
    },
];

/// Full-scale preset for one annotation family.
pub fn paper_scale_preset(kind: crate::synth::AnnotationKind) -> ScalePreset {
    PAPER_SCALE_PRESETS
        .iter()
        .copied()
        .find(|p| p.kind == kind)
        .expect("preset exists for every kind")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::AnnotationKind;

    #[test]
    fn paper_scale_presets_match_published_sizes() {
        let body = paper_scale_preset(AnnotationKind::BodyMarker);
        assert_eq!((body.clean_images, body.n_pairs), (4_975, 83_900));
        let radial = paper_scale_preset(AnnotationKind::RadialLine);
        assert_eq!((radial.clean_images, radial.n_pairs), (3_936, 80_000));
        let vascular = paper_scale_preset(AnnotationKind::VascularFlow);
        assert_eq!((vascular.clean_images, vascular.n_pairs), (250, 80_000));
    }

    #[test]
    fn smn_round_trips_within_tolerance() {
        let stats = ChannelStats {
            mean: [0.3, 0.4, 0.5],
            std: [0.2, 0.1, 0.25],
        };
        let original = Array3::from_shape_fn((6, 5, 3), |(i, j, c)| {
            ((i * 13 + j * 7 + c * 3) % 256) as f32 / 255.0
        });
        let mut data = original.clone();
        NormalizationMode::Smn.apply(&stats, &mut data);
        NormalizationMode::Smn.invert(&stats, &mut data);
        for (a, b) in data.iter().zip(original.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn smn_centers_constant_images() {
        let stats = ChannelStats {
            mean: [0.5, 0.5, 0.5],
            std: [0.0, 0.0, 0.0],
        };
        let mut data = Array3::from_elem((4, 4, 3), 0.5f32);
        NormalizationMode::Smn.apply(&stats, &mut data);
        assert!(data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_is_identity() {
        let stats = ChannelStats {
            mean: [0.3; 3],
            std: [0.1; 3],
        };
        let original = Array3::from_elem((3, 3, 3), 0.7f32);
        let mut data = original.clone();
        NormalizationMode::Linear.apply(&stats, &mut data);
        assert_eq!(data, original);
    }
}
