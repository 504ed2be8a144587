//! Procedural clean images.
//!
//! Stands in for clinical source data: a dark frame with a bright scan
//! sector, smooth low-frequency texture and a few elliptical blobs. Pixel
//! values are capped below 1.0 so the bright overlay palette always differs
//! from image content by a visible margin, which keeps difference
//! segmentation exact on synthesized data.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng::{self, seeded};
use crate::synth::Image;

#[derive(Debug, Clone)]
pub struct CleanImageConfig {
    pub height: usize,
    pub width: usize,
    /// Upper bound on any channel value; keep at least ~0.06 below the
    /// dimmest overlay palette channel.
    pub max_brightness: f32,
}

impl Default for CleanImageConfig {
    fn default() -> Self {
        CleanImageConfig {
            height: 128,
            width: 128,
            max_brightness: 0.90,
        }
    }
}

/// Bilinear sample of a coarse grid stretched over (h, w).
fn sample_grid(grid: &Array2<f64>, i: usize, j: usize, h: usize, w: usize) -> f64 {
    let (gh, gw) = grid.dim();
    let y = (i as f64 + 0.5) / h as f64 * (gh as f64 - 1.0);
    let x = (j as f64 + 0.5) / w as f64 * (gw as f64 - 1.0);
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(gh - 1);
    let x1 = (x0 + 1).min(gw - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    let top = grid[(y0, x0)] * (1.0 - fx) + grid[(y0, x1)] * fx;
    let bot = grid[(y1, x0)] * (1.0 - fx) + grid[(y1, x1)] * fx;
    top * (1.0 - fy) + bot * fy
}

fn random_grid(rng: &mut impl RngCore, gh: usize, gw: usize) -> Array2<f64> {
    Array2::from_shape_fn((gh, gw), |_| rng::uniform_f64(rng))
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Generate one grayscale ultrasound-style frame.
pub fn generate_clean_image(config: &CleanImageConfig, seed: u64) -> Image {
    let (h, w) = (config.height, config.width);
    let mut rng = seeded(seed);

    let coarse = random_grid(&mut rng, 5, 5);
    let fine = random_grid(&mut rng, 11, 11);

    // Scan sector: apex above the top edge, random half-angle and radius.
    // Edges fall off over a wide band so the content stays low-frequency.
    let apex_row = -(h as f64) * 0.15;
    let apex_col = w as f64 * (0.4 + 0.2 * rng::uniform_f64(&mut rng));
    let half_angle = 0.55 + 0.35 * rng::uniform_f64(&mut rng);
    let radius = h as f64 * (1.0 + 0.25 * rng::uniform_f64(&mut rng));

    // One or two elliptical inclusions with a smooth quadratic falloff.
    let n_blobs = rng::uniform_range(&mut rng, 1, 2);
    let mut blobs = Vec::new();
    for _ in 0..n_blobs {
        let cy = rng::uniform_f64(&mut rng) * h as f64;
        let cx = rng::uniform_f64(&mut rng) * w as f64;
        let ry = (0.12 + 0.15 * rng::uniform_f64(&mut rng)) * h as f64;
        let rx = (0.12 + 0.15 * rng::uniform_f64(&mut rng)) * w as f64;
        let amp = if rng::uniform_f64(&mut rng) < 0.5 { -0.22 } else { 0.18 };
        blobs.push((cy, cx, ry, rx, amp));
    }

    let mut data = ndarray::Array3::zeros((h, w, 3));
    for i in 0..h {
        for j in 0..w {
            let texture = (sample_grid(&coarse, i, j, h, w)
                + 0.18 * sample_grid(&fine, i, j, h, w))
                / 1.18;

            let dy = i as f64 - apex_row;
            let dx = j as f64 - apex_col;
            let dist = (dy * dy + dx * dx).sqrt();
            let angle = dx.atan2(dy).abs();
            let sector = smoothstep(half_angle, half_angle - 0.18, angle)
                * smoothstep(radius, radius - 10.0, dist);

            let mut v = 0.06 + 0.72 * texture;
            for &(cy, cx, ry, rx, amp) in &blobs {
                let e = ((i as f64 - cy) / ry).powi(2) + ((j as f64 - cx) / rx).powi(2);
                if e < 1.0 {
                    // (1 - e)^2 has zero slope at the rim.
                    v += amp * (1.0 - e) * (1.0 - e);
                }
            }
            v = (v * sector + 0.02 * (1.0 - sector)).clamp(0.0, config.max_brightness as f64);
            let v = v as f32;
            data[(i, j, 0)] = v;
            data[(i, j, 1)] = v;
            data[(i, j, 2)] = v;
        }
    }
    Image::new(data).expect("generated values are clamped into range")
}

/// Write `count` generated frames into `dir` as `clean_<n>.png`, returning
/// the paths in index order.
pub fn generate_clean_dir(
    config: &CleanImageConfig,
    count: usize,
    master_seed: u64,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if count == 0 {
        return Err(Error::validation("clean image count must be at least 1"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(count);
    for idx in 0..count {
        let seed = rng::derive_seed(master_seed ^ 0xC1EA_11AA, idx as u64);
        let img = generate_clean_image(config, seed);
        let path = dir.join(format!("clean_{idx:04}.png"));
        img.save_png(&path)?;
        paths.push(path);
    }
    Ok(paths)
}
