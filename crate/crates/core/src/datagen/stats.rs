//! Channel statistics over clean images.

use super::ChannelStats;
use crate::error::{Error, Result};
use crate::synth::Image;

/// Population mean and standard deviation per channel over every pixel of
/// every image, in the linear `[0, 1]` scale.
///
/// Sums are accumulated per image and then combined, all in f64, so the
/// result is order-deterministic. The epsilon floor for zero variance is
/// applied at normalization time, not here.
pub fn compute_channel_stats(images: &[Image]) -> Result<ChannelStats> {
    if images.is_empty() {
        return Err(Error::validation(
            "cannot compute channel stats over an empty image sequence",
        ));
    }
    let mut sum = [0.0f64; 3];
    let mut sum_sq = [0.0f64; 3];
    let mut count = 0u64;
    for img in images {
        let (h, w) = img.dims();
        let mut img_sum = [0.0f64; 3];
        let mut img_sum_sq = [0.0f64; 3];
        let px = img.pixels();
        for i in 0..h {
            for j in 0..w {
                for c in 0..3 {
                    let v = px[(i, j, c)] as f64;
                    img_sum[c] += v;
                    img_sum_sq[c] += v * v;
                }
            }
        }
        for c in 0..3 {
            sum[c] += img_sum[c];
            sum_sq[c] += img_sum_sq[c];
        }
        count += (h * w) as u64;
    }
    let n = count as f64;
    let mut mean = [0.0f64; 3];
    let mut std = [0.0f64; 3];
    for c in 0..3 {
        mean[c] = sum[c] / n;
        let var = (sum_sq[c] / n - mean[c] * mean[c]).max(0.0);
        std[c] = var.sqrt();
    }
    Ok(ChannelStats { mean, std })
}
