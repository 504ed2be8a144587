//! Training data sources.
//!
//! A [`BatchSource`] hands out (input, target) pairs per record; the target
//! depends on the training scheme. The manifest-backed source caches the
//! decoded 8-bit images in memory and normalizes on the fly.

use std::path::Path;

use ndarray::Array3;

use super::Scheme;
use crate::datagen::{ChannelStats, DatasetManifest, NormalizationMode};
use crate::error::{Error, Result};
use crate::synth::Image;

/// Supplies training pairs in CHW layout, already normalized.
pub trait BatchSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (channels, height, width) common to every record.
    fn dims(&self) -> (usize, usize, usize);

    /// Input and scheme-dependent target for one record.
    fn pair(&self, idx: usize, scheme: Scheme) -> Result<(Array3<f32>, Array3<f32>)>;
}

/// 8-bit HWC pixels cached in memory.
struct CachedImage {
    data: Vec<u8>,
}

impl CachedImage {
    fn from_image(img: &Image) -> CachedImage {
        CachedImage { data: img.to_u8() }
    }

    /// Decode to normalized CHW f32.
    fn to_chw(
        &self,
        (h, w): (usize, usize),
        normalization: NormalizationMode,
        stats: &ChannelStats,
    ) -> Array3<f32> {
        let mut out = Array3::zeros((3, h, w));
        for c in 0..3 {
            let (mean, std) = match normalization {
                NormalizationMode::Linear => (0.0f32, 1.0f32),
                NormalizationMode::Smn => (
                    stats.mean[c] as f32,
                    stats.std[c].max(crate::datagen::SMN_EPSILON) as f32,
                ),
            };
            for i in 0..h {
                for j in 0..w {
                    let v = self.data[(i * w + j) * 3 + c] as f32 / 255.0;
                    out[(c, i, j)] = (v - mean) / std;
                }
            }
        }
        out
    }
}

/// Dataset split loaded from a manifest, cached as 8-bit pixels.
pub struct ManifestSource {
    records: Vec<(CachedImage, CachedImage, CachedImage)>, // (noisy_a, noisy_b, clean)
    dims: (usize, usize),
    normalization: NormalizationMode,
    stats: ChannelStats,
}

impl ManifestSource {
    /// Load every record of `split` into memory. All images must share one
    /// size; training batches require uniform dims.
    pub fn load(
        manifest: &DatasetManifest,
        root: &Path,
        split: &str,
        normalization: NormalizationMode,
    ) -> Result<ManifestSource> {
        let ids = manifest.split_records(split)?;
        if ids.is_empty() {
            return Err(Error::validation(format!("split `{split}` is empty")));
        }
        let mut records = Vec::with_capacity(ids.len());
        let mut dims: Option<(usize, usize)> = None;
        for id in ids {
            let r = manifest.record(id)?;
            let load = |rel: &str| -> Result<(Image, (usize, usize))> {
                let img = Image::load_png(&root.join(rel))
                    .map_err(|e| Error::runtime(format!("record {id}: {e}")))?;
                let d = img.dims();
                Ok((img, d))
            };
            let (na, d0) = load(&r.noisy_a_path)?;
            let (nb, d1) = load(&r.noisy_b_path)?;
            let (cl, d2) = load(&r.clean_path)?;
            if d0 != d1 || d0 != d2 {
                return Err(Error::validation(format!(
                    "record {id}: image sizes differ within the tuple"
                )));
            }
            match dims {
                None => dims = Some(d0),
                Some(d) if d != d0 => {
                    return Err(Error::validation(format!(
                        "record {id}: size {d0:?} differs from the split's {d:?}; \
                         training requires uniform dims"
                    )))
                }
                _ => {}
            }
            records.push((
                CachedImage::from_image(&na),
                CachedImage::from_image(&nb),
                CachedImage::from_image(&cl),
            ));
        }
        Ok(ManifestSource {
            records,
            dims: dims.expect("split is non-empty"),
            normalization,
            stats: manifest.channel_stats.clone(),
        })
    }
}

impl BatchSource for ManifestSource {
    fn len(&self) -> usize {
        self.records.len()
    }

    fn dims(&self) -> (usize, usize, usize) {
        (3, self.dims.0, self.dims.1)
    }

    fn pair(&self, idx: usize, scheme: Scheme) -> Result<(Array3<f32>, Array3<f32>)> {
        let (na, nb, cl) = &self.records[idx];
        let input = na.to_chw(self.dims, self.normalization, &self.stats);
        let target = match scheme {
            Scheme::N2n => nb.to_chw(self.dims, self.normalization, &self.stats),
            Scheme::N2c => cl.to_chw(self.dims, self.normalization, &self.stats),
        };
        Ok((input, target))
    }
}

/// Fully materialized source for synthetic experiments and tests.
pub struct InMemorySource {
    /// (input, noisy target, clean target) per record, CHW, pre-normalized.
    pub records: Vec<(Array3<f32>, Array3<f32>, Array3<f32>)>,
}

impl BatchSource for InMemorySource {
    fn len(&self) -> usize {
        self.records.len()
    }

    fn dims(&self) -> (usize, usize, usize) {
        self.records[0].0.dim()
    }

    fn pair(&self, idx: usize, scheme: Scheme) -> Result<(Array3<f32>, Array3<f32>)> {
        let (input, noisy_t, clean_t) = &self.records[idx];
        let target = match scheme {
            Scheme::N2n => noisy_t.clone(),
            Scheme::N2c => clean_t.clone(),
        };
        Ok((input.clone(), target))
    }
}

