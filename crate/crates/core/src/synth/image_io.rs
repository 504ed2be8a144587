//! RGB image container and 8-bit PNG round-tripping.

use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// An H×W RGB image with channel values in `[0, 1]`.
///
/// Values map linearly to 8-bit sRGB as `v / 255`; saving quantizes with
/// round-to-nearest, so images whose values already sit on the 8-bit grid
/// survive a save/load cycle exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    data: Array3<f32>,
}

impl Image {
    /// Wrap an (H, W, 3) array, validating the value range.
    pub fn new(data: Array3<f32>) -> Result<Self> {
        let (h, w, c) = data.dim();
        if c != 3 {
            return Err(Error::validation(format!(
                "image must have 3 channels, got {c}"
            )));
        }
        if h == 0 || w == 0 {
            return Err(Error::validation("image dimensions must be nonzero"));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation("image values must lie in [0, 1]"));
        }
        Ok(Image { data })
    }

    /// Constant-valued image, mainly for tests.
    pub fn splat(h: usize, w: usize, value: f32) -> Result<Self> {
        Image::new(Array3::from_elem((h, w, 3), value))
    }

    pub fn from_u8(h: usize, w: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != h * w * 3 {
            return Err(Error::validation(format!(
                "buffer length {} does not match {h}x{w}x3",
                rgb.len()
            )));
        }
        let data = Array3::from_shape_fn((h, w, 3), |(i, j, c)| {
            rgb[(i * w + j) * 3 + c] as f32 / 255.0
        });
        Ok(Image { data })
    }

    /// Quantize to 8-bit with round-to-nearest.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        let (h, w, _) = self.data.dim();
        (h, w)
    }

    pub fn pixels(&self) -> &Array3<f32> {
        &self.data
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .into_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        Image::from_u8(h, w, img.as_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let (h, w) = self.dims();
        let buf = self.to_u8();
        image::save_buffer(path, &buf, w as u32, h as u32, image::ColorType::Rgb8).map_err(|e| {
            Error::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            }
        })
    }

    /// Rec.601 luma in `[0, 1]`.
    pub fn luma(&self) -> Array2<f32> {
        let (h, w) = self.dims();
        Array2::from_shape_fn((h, w), |(i, j)| {
            0.299 * self.data[(i, j, 0)] + 0.587 * self.data[(i, j, 1)] + 0.114 * self.data[(i, j, 2)]
        })
    }
}

/// Save a binary mask as an 8-bit grayscale PNG with values {0, 255}.
pub fn save_mask_png(mask: &Array2<u8>, path: &Path) -> Result<()> {
    let (h, w) = mask.dim();
    let buf: Vec<u8> = mask.iter().map(|&m| if m != 0 { 255u8 } else { 0u8 }).collect();
    image::save_buffer(path, &buf, w as u32, h as u32, image::ColorType::L8).map_err(|e| {
        Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })
}

/// Load a binary mask, validating that every sample is 0 or 255.
pub fn load_mask_png(path: &Path) -> Result<Array2<u8>> {
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.as_raw();
    if let Some(bad) = raw.iter().find(|&&v| v != 0 && v != 255) {
        return Err(Error::Image {
            path: path.to_path_buf(),
            message: format!("mask contains non-binary value {bad}"),
        });
    }
    Ok(Array2::from_shape_fn((h, w), |(i, j)| {
        u8::from(raw[i * w + j] == 255)
    }))
}
