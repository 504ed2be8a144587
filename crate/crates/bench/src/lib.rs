//! Shared fixtures for the criterion benchmarks.

use annoclean_core::rng::{seeded, uniform_f64};
use annoclean_core::Image;
use ndarray::{Array3, Array4};

pub fn random_image(seed: u64, h: usize, w: usize) -> Image {
    let mut rng = seeded(seed);
    Image::new(Array3::from_shape_fn((h, w, 3), |_| {
        uniform_f64(&mut rng) as f32 * 0.9
    }))
    .expect("values in range")
}

pub fn random_batch(seed: u64, n: usize, h: usize, w: usize) -> Array4<f32> {
    let mut rng = seeded(seed);
    Array4::from_shape_fn((n, 3, h, w), |_| uniform_f64(&mut rng) as f32)
}
