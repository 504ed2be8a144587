//! Annotation synthesis: glyph libraries, random placement, rasterization
//! and alpha compositing onto clean images.
//!
//! The three annotation families mirror what sonographers stamp onto saved
//! frames: a body-marker icon, pairs of connected cross markers measuring a
//! lesion, and the rectangle outline of the flowmeter's region of interest.
//! All sampling is driven by an explicit seeded generator; the same seed,
//! library and config always produce bit-identical overlays.

mod image_io;
mod placement;
mod render;
mod stamp;

pub use image_io::{load_mask_png, save_mask_png, Image};
pub use placement::{sample_placement, PlacedElement, Placement, Sampler};
pub use render::{composite, render_annotation, Overlay};
pub use stamp::{load_stamp_library, AnnotationStamp, StampLibrary};

use serde::{Deserialize, Serialize};

/// The three annotation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    /// Icon from a fixed set indicating body region and probe orientation.
    BodyMarker,
    /// One to three pairs of cross markers joined by dashed lines.
    RadialLine,
    /// Rectangle outline marking the flowmeter's region of interest.
    VascularFlow,
}

impl AnnotationKind {
    pub const ALL: [AnnotationKind; 3] = [
        AnnotationKind::BodyMarker,
        AnnotationKind::RadialLine,
        AnnotationKind::VascularFlow,
    ];

    /// Directory name used by the stamp-library layout.
    pub fn dir_name(self) -> &'static str {
        match self {
            AnnotationKind::BodyMarker => "body_marker",
            AnnotationKind::RadialLine => "radial_line",
            AnnotationKind::VascularFlow => "vascular_flow",
        }
    }
}

impl std::fmt::Display for AnnotationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// Tunables for placement sampling and rasterization.
///
/// Defaults: radial-line pair counts weighted (0.25, 0.5, 0.25) towards the
/// typical two pairs, endpoint distance in `[16, min(H,W)/2]` pixels,
/// vascular-flow rectangle sides in 20-60% of the image dimension with a
/// border of 1-3 px, and a small palette of high-contrast overlay colors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Relative weights for drawing 1, 2 or 3 radial-line pairs.
    pub pair_count_weights: [f64; 3],
    /// Minimum distance between the two cross centers of a pair, in px.
    pub endpoint_dist_min: f64,
    /// Maximum endpoint distance; `None` means `min(H, W) / 2`.
    pub endpoint_dist_max: Option<f64>,
    /// Vascular-flow rectangle side lengths as fractions of the image dims.
    pub rect_side_frac: (f64, f64),
    /// Candidate border widths for the vascular-flow rectangle.
    pub border_widths: Vec<usize>,
    /// Overlay color palette (linear [0,1] RGB).
    pub palette: Vec<[f32; 3]>,
    /// Dash pattern for radial-line connectors: (on, off) pixel runs.
    pub dash: (usize, usize),
    /// Stamp scale range; (1.0, 1.0) disables resampling.
    pub scale_range: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pair_count_weights: [0.25, 0.5, 0.25],
            endpoint_dist_min: 16.0,
            endpoint_dist_max: None,
            rect_side_frac: (0.2, 0.6),
            border_widths: vec![1, 2, 3],
            palette: vec![
                [1.0, 1.0, 0.0], // yellow
                [1.0, 1.0, 1.0], // white
                [0.0, 1.0, 1.0], // cyan
                [0.5, 1.0, 0.0], // lime
            ],
            dash: (3, 3),
            scale_range: (1.0, 1.0),
        }
    }
}
