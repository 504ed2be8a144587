//! Difference segmentation and overlap scores.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::synth::Image;

/// Default threshold: two 8-bit levels, the smallest change that is still
/// visible after one level of quantization tolerance.
pub const DEFAULT_TAU: f32 = 2.0 / 255.0;

/// An H×W mask with strictly binary pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pixels: Array2<u8>,
}

impl BinaryMask {
    pub fn new(pixels: Array2<u8>) -> Result<Self> {
        if pixels.iter().any(|&v| v > 1) {
            return Err(Error::validation("mask values must be 0 or 1"));
        }
        Ok(BinaryMask { pixels })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn pixels(&self) -> &Array2<u8> {
        &self.pixels
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == 1).count()
    }
}

/// Recover the noise mask by thresholding the input/output difference:
/// `mask(p) = 1` iff the largest per-channel absolute difference at `p` is
/// at least `tau`. Both images must be in the linear `[0, 1]` scale.
pub fn extract_segmentation(input: &Image, output: &Image, tau: f32) -> Result<BinaryMask> {
    if input.dims() != output.dims() {
        return Err(Error::validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            input.dims(),
            output.dims()
        )));
    }
    let (h, w) = input.dims();
    let a = input.pixels();
    let b = output.pixels();
    let pixels = Array2::from_shape_fn((h, w), |(i, j)| {
        let d0 = (a[(i, j, 0)] - b[(i, j, 0)]).abs();
        let d1 = (a[(i, j, 1)] - b[(i, j, 1)]).abs();
        let d2 = (a[(i, j, 2)] - b[(i, j, 2)]).abs();
        u8::from(d0.max(d1).max(d2) >= tau)
    });
    Ok(BinaryMask { pixels })
}

struct Overlap {
    both: usize,
    pred: usize,
    truth: usize,
    total: usize,
}

fn overlap(pred: &BinaryMask, truth: &BinaryMask) -> Result<Overlap> {
    if pred.dims() != truth.dims() {
        return Err(Error::validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            pred.dims(),
            truth.dims()
        )));
    }
    let mut both = 0;
    let mut p = 0;
    let mut t = 0;
    for (a, b) in pred.pixels.iter().zip(truth.pixels.iter()) {
        both += usize::from(*a == 1 && *b == 1);
        p += usize::from(*a == 1);
        t += usize::from(*b == 1);
    }
    Ok(Overlap {
        both,
        pred: p,
        truth: t,
        total: pred.pixels.len(),
    })
}

/// Sørensen-Dice coefficient `2|P∩T| / (|P| + |T|)`; 1.0 when both masks
/// are empty.
pub fn dice(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64> {
    let o = overlap(pred, truth)?;
    if o.pred + o.truth == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * o.both as f64 / (o.pred + o.truth) as f64)
}

/// Intersection over union `|P∩T| / |P∪T|`; 1.0 when both masks are empty.
pub fn iou(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64> {
    let o = overlap(pred, truth)?;
    let union = o.pred + o.truth - o.both;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(o.both as f64 / union as f64)
}

/// Fraction of pixels classified correctly, `(TP + TN) / total`.
pub fn pixel_accuracy(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64> {
    let o = overlap(pred, truth)?;
    let tn = o.total - (o.pred + o.truth - o.both);
    Ok((o.both + tn) as f64 / o.total as f64)
}
