//! Independent oracles for the metric implementations: brute-force set
//! counting for the overlap scores, a naive per-window evaluation for SSIM,
//! and algebraic identities.

use std::collections::HashSet;

use annoclean_core::metrics::{
    dice, extract_segmentation, iou, pixel_accuracy, ssim_luma, BinaryMask, SsimParams,
};
use annoclean_core::rng::{seeded, uniform_f64};
use annoclean_core::Image;
use ndarray::Array2;

fn random_mask(rng: &mut impl rand_core::RngCore, h: usize, w: usize, density: f64) -> BinaryMask {
    let px = Array2::from_shape_fn((h, w), |_| u8::from(uniform_f64(rng) < density));
    BinaryMask::new(px).unwrap()
}

fn mask_set(mask: &BinaryMask) -> HashSet<(usize, usize)> {
    mask.pixels()
        .indexed_iter()
        .filter(|(_, &v)| v == 1)
        .map(|(idx, _)| idx)
        .collect()
}

#[test]
fn overlap_scores_match_set_counting_on_random_masks() {
    let mut rng = seeded(0xD1CE);
    for trial in 0..100 {
        let density = 0.05 + 0.9 * (trial as f64 / 99.0);
        let p = random_mask(&mut rng, 16, 16, density);
        let t = random_mask(&mut rng, 16, 16, 1.0 - density * 0.7);
        let ps = mask_set(&p);
        let ts = mask_set(&t);
        let inter = ps.intersection(&ts).count();
        let union = ps.union(&ts).count();

        let expected_dice = if ps.is_empty() && ts.is_empty() {
            1.0
        } else {
            2.0 * inter as f64 / (ps.len() + ts.len()) as f64
        };
        let expected_iou = if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        };
        let correct = 256 - (union - inter);
        let expected_pa = correct as f64 / 256.0;

        assert_eq!(dice(&p, &t).unwrap(), expected_dice, "trial {trial}");
        assert_eq!(iou(&p, &t).unwrap(), expected_iou, "trial {trial}");
        assert_eq!(pixel_accuracy(&p, &t).unwrap(), expected_pa, "trial {trial}");

        // Swapping arguments never changes any of the three.
        assert_eq!(dice(&p, &t).unwrap(), dice(&t, &p).unwrap());
        assert_eq!(iou(&p, &t).unwrap(), iou(&t, &p).unwrap());
        assert_eq!(
            pixel_accuracy(&p, &t).unwrap(),
            pixel_accuracy(&t, &p).unwrap()
        );
    }
}

#[test]
fn dice_equals_2j_over_1_plus_j() {
    let mut rng = seeded(0x10_05);
    for trial in 0..100 {
        let p = random_mask(&mut rng, 16, 16, 0.3);
        let t = random_mask(&mut rng, 16, 16, 0.3);
        let d = dice(&p, &t).unwrap();
        let j = iou(&p, &t).unwrap();
        assert!(
            (d - 2.0 * j / (1.0 + j)).abs() <= 1e-12,
            "trial {trial}: D={d} J={j}"
        );
    }
}

/// Naive SSIM: recompute the weighted moments inside every window from
/// scratch, nothing shared with the separable-filter implementation.
fn ssim_window_oracle(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let window = 11usize;
    let sigma = 1.5f64;
    let half = (window - 1) as f64 / 2.0;
    let mut weights = vec![vec![0.0f64; window]; window];
    let mut wsum = 0.0;
    for (i, row) in weights.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let dy = i as f64 - half;
            let dx = j as f64 - half;
            *w = (-(dy * dy) / (2.0 * sigma * sigma)).exp()
                * (-(dx * dx) / (2.0 * sigma * sigma)).exp();
            wsum += *w;
        }
    }
    for row in &mut weights {
        for w in row.iter_mut() {
            *w /= wsum;
        }
    }

    let (h, w) = a.dim();
    let c1 = 1e-4f64;
    let c2 = 9e-4f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - window {
        for x in 0..=w - window {
            let (mut ma, mut mb, mut maa, mut mbb, mut mab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..window {
                for j in 0..window {
                    let wt = weights[i][j];
                    let va = a[(y + i, x + j)];
                    let vb = b[(y + i, x + j)];
                    ma += wt * va;
                    mb += wt * vb;
                    maa += wt * va * va;
                    mbb += wt * vb * vb;
                    mab += wt * va * vb;
                }
            }
            let va = maa - ma * ma;
            let vb = mbb - mb * mb;
            let cov = mab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn ssim_matches_sliding_window_oracle() {
    let mut rng = seeded(0x551A);
    for trial in 0..20 {
        let a = Array2::from_shape_fn((16, 16), |_| uniform_f64(&mut rng));
        let b = Array2::from_shape_fn((16, 16), |_| uniform_f64(&mut rng));
        let fast = ssim_luma(&a, &b, &SsimParams::default()).unwrap();
        let slow = ssim_window_oracle(&a, &b);
        assert!(
            (fast - slow).abs() < 1e-6,
            "trial {trial}: {fast} vs {slow}"
        );
    }
}

#[test]
fn extract_segmentation_is_monotone_in_tau() {
    let mut rng = seeded(0x7A0);
    let a = Image::new(ndarray::Array3::from_shape_fn((12, 12, 3), |_| {
        uniform_f64(&mut rng) as f32 * 0.9
    }))
    .unwrap();
    let b = Image::new(ndarray::Array3::from_shape_fn((12, 12, 3), |_| {
        uniform_f64(&mut rng) as f32 * 0.9
    }))
    .unwrap();
    let taus = [0.0f32, 0.5 / 255.0, 2.0 / 255.0, 8.0 / 255.0, 0.2, 0.9];
    let mut prev: Option<BinaryMask> = None;
    for tau in taus {
        let mask = extract_segmentation(&a, &b, tau).unwrap();
        if let Some(p) = &prev {
            // Larger tau must only remove pixels.
            for (idx, &v) in mask.pixels().indexed_iter() {
                if v == 1 {
                    assert_eq!(p.pixels()[idx], 1, "tau {tau} grew the mask at {idx:?}");
                }
            }
        }
        prev = Some(mask);
    }
}
