//! PSNR-HVS-M: PSNR on 8×8 DCT coefficients, weighted by the contrast
//! sensitivity function and reduced by between-coefficient contrast masking.
//!
//! Reference-first: the first argument is the pristine image, the second
//! the distorted one. The masking threshold takes the worse of the two
//! blocks, so the value is symmetric in practice, but callers should keep
//! the reference first.

use ndarray::Array2;

use super::dct;
use crate::error::{Error, Result};
use crate::synth::Image;

/// Scores above this are reported as the cap.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Contrast sensitivity weights per DCT coefficient, from the metric
/// authors' published reference implementation (derived from the JPEG
/// luminance quantization table); frozen verbatim.
#[rustfmt::skip]
const CSF_COF: [[f64; 8]; 8] = [
    [1.608443, 2.339554, 2.573509, 1.608443, 1.072295, 0.643377, 0.504610, 0.421887],
    [2.144591, 2.144591, 1.838221, 1.354478, 0.989811, 0.443708, 0.428918, 0.467911],
    [1.838221, 1.979622, 1.608443, 1.072295, 0.643377, 0.451493, 0.372972, 0.459555],
    [1.838221, 1.513829, 1.169777, 0.887417, 0.504610, 0.295806, 0.321689, 0.415082],
    [1.429727, 1.169777, 0.695543, 0.459555, 0.378457, 0.236102, 0.249855, 0.334222],
    [1.072295, 0.735288, 0.467911, 0.402111, 0.317717, 0.247453, 0.227744, 0.279729],
    [0.525206, 0.402111, 0.329937, 0.295806, 0.249855, 0.212687, 0.214459, 0.254803],
    [0.357432, 0.279729, 0.270896, 0.262603, 0.229778, 0.257351, 0.249855, 0.259950],
];

/// Contrast-masking weights from the same reference implementation
/// (normalized and squared quantization table); frozen verbatim.
#[rustfmt::skip]
const MASK_COF: [[f64; 8]; 8] = [
    [0.390625, 0.826446, 1.000000, 0.390625, 0.173611, 0.062500, 0.038447, 0.026874],
    [0.694444, 0.694444, 0.510204, 0.277008, 0.147929, 0.029727, 0.027778, 0.033058],
    [0.510204, 0.591716, 0.390625, 0.173611, 0.062500, 0.030779, 0.021004, 0.031888],
    [0.510204, 0.346021, 0.206612, 0.118906, 0.038447, 0.013212, 0.015625, 0.026015],
    [0.308642, 0.206612, 0.073046, 0.031888, 0.021626, 0.008417, 0.009426, 0.016866],
    [0.173611, 0.081633, 0.033058, 0.024414, 0.015242, 0.009246, 0.007831, 0.011815],
    [0.041649, 0.024414, 0.016437, 0.013212, 0.009426, 0.006830, 0.006944, 0.009803],
    [0.019290, 0.011815, 0.011080, 0.010412, 0.007972, 0.010000, 0.009426, 0.010203],
];

/// `var(block) * n`, the reference implementation's variance measure.
fn vari(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ssd: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    ssd * n / (n - 1.0)
}

/// Masking energy of one block: CSF-weighted AC energy scaled by how much
/// of the block's variance lives in its 4×4 quadrants.
fn mask_effect(block: &[[f64; dct::BLOCK]; dct::BLOCK], coeffs: &[[f64; 8]; 8]) -> f64 {
    let mut m = 0.0;
    for k in 0..8 {
        for l in 0..8 {
            if k != 0 || l != 0 {
                m += coeffs[k][l] * coeffs[k][l] * MASK_COF[k][l];
            }
        }
    }
    // Quadrant-variance ratio.
    let flat: Vec<f64> = block.iter().flatten().copied().collect();
    let whole = vari(&flat);
    let mut pop = 0.0;
    if whole != 0.0 {
        let mut quad = 0.0;
        for (qi, qj) in [(0, 0), (0, 4), (4, 4), (4, 0)] {
            let mut vals = Vec::with_capacity(16);
            for i in 0..4 {
                for j in 0..4 {
                    vals.push(block[qi + i][qj + j]);
                }
            }
            quad += vari(&vals);
        }
        pop = quad / whole;
    }
    (m * pop).sqrt() / 32.0
}

/// PSNR-HVS-M over a `[0, 255]` luma plane pair.
///
/// Blocks tile the image with step 8; trailing rows/columns that do not
/// fill a block are ignored. Both planes must allow at least one block.
pub fn psnr_hvs_m_luma(reference: &Array2<f64>, distorted: &Array2<f64>) -> Result<f64> {
    if reference.dim() != distorted.dim() {
        return Err(Error::validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            reference.dim(),
            distorted.dim()
        )));
    }
    let (h, w) = reference.dim();
    if h < 8 || w < 8 {
        return Err(Error::validation(format!(
            "images must be at least 8x8 for PSNR-HVS-M, got {h}x{w}"
        )));
    }

    let mut sum = 0.0f64;
    let mut num = 0u64;
    let mut a = [[0.0; 8]; 8];
    let mut b = [[0.0; 8]; 8];
    let mut y = 0;
    while y + 8 <= h {
        let mut x = 0;
        while x + 8 <= w {
            for i in 0..8 {
                for j in 0..8 {
                    a[i][j] = reference[(y + i, x + j)];
                    b[i][j] = distorted[(y + i, x + j)];
                }
            }
            let da = dct::forward(&a);
            let db = dct::forward(&b);
            let mask = mask_effect(&a, &da).max(mask_effect(&b, &db));
            for k in 0..8 {
                for l in 0..8 {
                    let mut u = (da[k][l] - db[k][l]).abs();
                    if k != 0 || l != 0 {
                        let reduction = mask / MASK_COF[k][l];
                        u = if u < reduction { 0.0 } else { u - reduction };
                    }
                    sum += (u * CSF_COF[k][l]).powi(2);
                    num += 1;
                }
            }
            x += 8;
        }
        y += 8;
    }

    let mse = sum / num as f64;
    if mse < 1e-10 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// PSNR-HVS-M between two RGB images; computed on Rec.601 luma scaled to
/// `[0, 255]`.
pub fn psnr_hvs_m(reference: &Image, distorted: &Image) -> Result<f64> {
    if reference.dims() != distorted.dims() {
        return Err(Error::validation(format!(
            "dimension mismatch: {:?} vs {:?}",
            reference.dims(),
            distorted.dims()
        )));
    }
    let to_luma255 = |img: &Image| {
        let luma = img.luma();
        luma.mapv(|v| v as f64 * 255.0)
    };
    psnr_hvs_m_luma(&to_luma255(reference), &to_luma255(distorted))
}
