//! Structural similarity on Rec.601 luma.
//!
//! Mean local SSIM over every valid 11×11 window with a Gaussian weighting
//! (σ = 1.5), K1 = 0.01, K2 = 0.03 and dynamic range 1.0. Computed with
//! separable filtering of the five moment maps.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::synth::Image;

#[derive(Debug, Clone, Copy)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range of the inputs.
    pub l: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            l: 1.0,
        }
    }
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let half = (window - 1) as f64 / 2.0;
    let mut k: Vec<f64> = (0..window)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Valid-mode separable filtering with the same 1-D kernel on both axes.
fn filter_valid(img: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (h, w) = img.dim();
    let k = kernel.len();
    let mut horiz = Array2::zeros((h, w - k + 1));
    for i in 0..h {
        for j in 0..w - k + 1 {
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                acc += kv * img[(i, j + t)];
            }
            horiz[(i, j)] = acc;
        }
    }
    let mut out = Array2::zeros((h - k + 1, w - k + 1));
    for i in 0..h - k + 1 {
        for j in 0..w - k + 1 {
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(i + t, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Mean SSIM over two luma planes in `[0, l]`. The raw value lies in
/// `[-1, 1]`; reports clamp it to `[0, 1]`.
pub fn ssim_luma(a: &Array2<f64>, b: &Array2<f64>, params: &SsimParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let (h, w) = a.dim();
    if h < params.window || w < params.window {
        return Err(Error::validation(format!(
            "images must be at least {0}x{0} for SSIM, got {h}x{w}",
            params.window
        )));
    }
    let kernel = gaussian_kernel(params.window, params.sigma);
    let mu_a = filter_valid(a, &kernel);
    let mu_b = filter_valid(b, &kernel);
    let aa = filter_valid(&(a * a), &kernel);
    let bb = filter_valid(&(b * b), &kernel);
    let ab = filter_valid(&(a * b), &kernel);

    let c1 = (params.k1 * params.l).powi(2);
    let c2 = (params.k2 * params.l).powi(2);

    let mut total = 0.0;
    let n = mu_a.len();
    for (idx, ma) in mu_a.indexed_iter() {
        let mb = mu_b[idx];
        let va = aa[idx] - ma * ma;
        let vb = bb[idx] - mb * mb;
        let cov = ab[idx] - ma * mb;
        let s = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        total += s;
    }
    Ok(total / n as f64)
}

/// Mean SSIM between two RGB images on Rec.601 luma.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let la = a.luma().mapv(|v| v as f64);
    let lb = b.luma().mapv(|v| v as f64);
    ssim_luma(&la, &lb, &SsimParams::default())
}
