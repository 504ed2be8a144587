//! Annotation glyph bitmaps.
//!
//! Stamps either come from a user-supplied library directory
//! (`<root>/{body_marker,radial_line,vascular_flow}/*.png`, RGBA 8-bit) or
//! from the built-in procedural set, which covers every family so the
//! pipeline runs without proprietary icon files.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array3;

use super::AnnotationKind;
use crate::error::{Error, Result};

/// A glyph bitmap with straight (non-premultiplied) alpha.
#[derive(Debug, Clone)]
pub struct AnnotationStamp {
    kind: AnnotationKind,
    /// (h, w, 4): RGB in [0,1] plus alpha in [0,1].
    pixels: Array3<f32>,
    nominal_size: (usize, usize),
}

impl AnnotationStamp {
    pub fn new(kind: AnnotationKind, pixels: Array3<f32>) -> Result<Self> {
        let (h, w, c) = pixels.dim();
        if c != 4 {
            return Err(Error::validation(format!(
                "stamp must be RGBA, got {c} channels"
            )));
        }
        if h == 0 || w == 0 {
            return Err(Error::validation("stamp dimensions must be nonzero"));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation("stamp values must lie in [0, 1]"));
        }
        if !pixels.slice(ndarray::s![.., .., 3]).iter().any(|&a| a > 0.0) {
            return Err(Error::validation("stamp alpha is zero everywhere"));
        }
        Ok(AnnotationStamp {
            kind,
            nominal_size: (h, w),
            pixels,
        })
    }

    pub fn kind(&self) -> AnnotationKind {
        self.kind
    }

    pub fn pixels(&self) -> &Array3<f32> {
        &self.pixels
    }

    /// (height, width) in pixels.
    pub fn nominal_size(&self) -> (usize, usize) {
        self.nominal_size
    }

    /// Mean color over the opaque support; used for connector lines drawn
    /// alongside this stamp.
    pub fn dominant_color(&self) -> [f32; 3] {
        let (h, w, _) = self.pixels.dim();
        let mut sum = [0.0f64; 3];
        let mut n = 0u64;
        for i in 0..h {
            for j in 0..w {
                if self.pixels[(i, j, 3)] > 0.0 {
                    for c in 0..3 {
                        sum[c] += self.pixels[(i, j, c)] as f64;
                    }
                    n += 1;
                }
            }
        }
        [
            (sum[0] / n as f64) as f32,
            (sum[1] / n as f64) as f32,
            (sum[2] / n as f64) as f32,
        ]
    }

    /// Nearest-neighbor resample by `scale`; identity for `scale == 1.0`.
    pub fn scaled(&self, scale: f64) -> AnnotationStamp {
        if scale == 1.0 {
            return self.clone();
        }
        let (h, w) = self.nominal_size;
        let nh = ((h as f64 * scale).round() as usize).max(1);
        let nw = ((w as f64 * scale).round() as usize).max(1);
        let pixels = Array3::from_shape_fn((nh, nw, 4), |(i, j, c)| {
            let si = ((i as f64 + 0.5) / scale) as usize;
            let sj = ((j as f64 + 0.5) / scale) as usize;
            self.pixels[(si.min(h - 1), sj.min(w - 1), c)]
        });
        AnnotationStamp {
            kind: self.kind,
            nominal_size: (nh, nw),
            pixels,
        }
    }
}

/// Stamps grouped by annotation family.
#[derive(Debug, Clone)]
pub struct StampLibrary {
    stamps: BTreeMap<&'static str, Vec<AnnotationStamp>>,
}

impl StampLibrary {
    /// The built-in procedural glyph set: five body-marker silhouettes and
    /// one cross marker per palette color. Vascular-flow rectangles are
    /// rasterized directly and need no stamps.
    pub fn builtin() -> StampLibrary {
        let mut stamps: BTreeMap<&'static str, Vec<AnnotationStamp>> = BTreeMap::new();
        stamps.insert(
            AnnotationKind::BodyMarker.dir_name(),
            builtin_body_markers(),
        );
        stamps.insert(AnnotationKind::RadialLine.dir_name(), builtin_crosses());
        stamps.insert(AnnotationKind::VascularFlow.dir_name(), Vec::new());
        StampLibrary { stamps }
    }

    pub fn from_stamps(stamps: Vec<AnnotationStamp>) -> StampLibrary {
        let mut map: BTreeMap<&'static str, Vec<AnnotationStamp>> = BTreeMap::new();
        for s in stamps {
            map.entry(s.kind().dir_name()).or_default().push(s);
        }
        StampLibrary { stamps: map }
    }

    /// All stamps of one family, in deterministic order.
    pub fn for_kind(&self, kind: AnnotationKind) -> &[AnnotationStamp] {
        self.stamps
            .get(kind.dir_name())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Error unless the family that `kind` renders from is non-empty.
    /// Vascular flow draws procedurally and never requires stamps.
    pub fn require_kind(&self, kind: AnnotationKind) -> Result<()> {
        if kind != AnnotationKind::VascularFlow && self.for_kind(kind).is_empty() {
            return Err(Error::config(format!(
                "stamp library has no stamps for kind `{kind}`"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.stamps.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Load a stamp library from `<root>/{body_marker,radial_line,vascular_flow}/*.png`.
///
/// Files are read in sorted name order. A stamp whose alpha channel is zero
/// everywhere is rejected with an error naming the file. Only directories
/// that exist are read; use [`StampLibrary::require_kind`] to enforce that a
/// requested family is populated.
pub fn load_stamp_library(root: &Path) -> Result<StampLibrary> {
    if !root.is_dir() {
        return Err(Error::config(format!(
            "stamp library directory {} does not exist",
            root.display()
        )));
    }
    let mut all = Vec::new();
    for kind in AnnotationKind::ALL {
        let dir = root.join(kind.dir_name());
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        for path in files {
            let img = image::open(&path)
                .map_err(|e| Error::Image {
                    path: path.clone(),
                    message: e.to_string(),
                })?
                .into_rgba8();
            let (w, h) = (img.width() as usize, img.height() as usize);
            let raw = img.as_raw();
            let pixels = Array3::from_shape_fn((h, w, 4), |(i, j, c)| {
                raw[(i * w + j) * 4 + c] as f32 / 255.0
            });
            let stamp = AnnotationStamp::new(kind, pixels).map_err(|e| match e {
                Error::Validation(msg) => {
                    Error::validation(format!("stamp {}: {msg}", path.display()))
                }
                other => other,
            })?;
            all.push(stamp);
        }
    }
    Ok(StampLibrary::from_stamps(all))
}

/// 11×11 cross marker: both diagonals at thickness 2, hard-edged alpha.
pub fn cross_glyph(color: [f32; 3]) -> AnnotationStamp {
    const N: usize = 11;
    let mut pixels = Array3::zeros((N, N, 4));
    for i in 0..N {
        for j in 0..N {
            let d1 = (i as isize - j as isize).abs();
            let d2 = (i as isize + j as isize - (N as isize - 1)).abs();
            if d1 <= 1 || d2 <= 1 {
                pixels[(i, j, 0)] = color[0];
                pixels[(i, j, 1)] = color[1];
                pixels[(i, j, 2)] = color[2];
                pixels[(i, j, 3)] = 1.0;
            }
        }
    }
    AnnotationStamp::new(AnnotationKind::RadialLine, pixels).expect("cross glyph is non-empty")
}

fn builtin_crosses() -> Vec<AnnotationStamp> {
    super::SynthConfig::default()
        .palette
        .iter()
        .map(|&c| cross_glyph(c))
        .collect()
}

/// Simple bright silhouettes standing in for the device's body-marker icon
/// set. Every opaque pixel is near-white so overlays stay visible against
/// in-gamut image content; orientation is conveyed by a transparent notch.
fn builtin_body_markers() -> Vec<AnnotationStamp> {
    const N: usize = 24;
    let color = [0.96f32, 0.96, 0.96];
    let shapes: Vec<Box<dyn Fn(f64, f64) -> bool>> = vec![
        // Ellipse with a notch on the right.
        Box::new(|y, x| {
            let e = (y / 0.85).powi(2) + (x / 0.55).powi(2) <= 1.0;
            let notch = x > 0.25 && y.abs() < 0.18;
            e && !notch
        }),
        // Disc with a wedge notch at the top.
        Box::new(|y, x| {
            let d = (y * y + x * x).sqrt() <= 0.9;
            let wedge = y < -0.3 && x.abs() < 0.35 * (-y);
            d && !wedge
        }),
        // Rounded rectangle (torso).
        Box::new(|y, x| y.abs() <= 0.85 && x.abs() <= 0.5 && (y.abs() - 0.6).max(0.0).powi(2) + (x.abs() - 0.25).max(0.0).powi(2) <= 0.25 * 0.25),
        // Triangle pointing up.
        Box::new(|y, x| y <= 0.8 && y >= -0.8 && x.abs() <= 0.55 * (0.8 - y) / 1.6 + 0.1),
        // Capsule (limb) with a gap in the middle.
        Box::new(|y, x| {
            let cap = x.abs() <= 0.3 && y.abs() <= 0.9 || (y.abs() - 0.9).powi(2) + x.powi(2) * (1.0 / 0.09) <= 1.0;
            let gap = y.abs() < 0.08;
            cap && !gap
        }),
    ];
    shapes
        .into_iter()
        .map(|inside| {
            let pixels = Array3::from_shape_fn((N, N, 4), |(i, j, c)| {
                // Map pixel centers to [-1, 1].
                let y = (i as f64 + 0.5) / N as f64 * 2.0 - 1.0;
                let x = (j as f64 + 0.5) / N as f64 * 2.0 - 1.0;
                if inside(y, x) {
                    if c < 3 {
                        color[c]
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            });
            AnnotationStamp::new(AnnotationKind::BodyMarker, pixels)
                .expect("builtin silhouette is non-empty")
        })
        .collect()
}
