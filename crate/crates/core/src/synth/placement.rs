//! Random placement of annotation primitives.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::{AnnotationKind, StampLibrary, SynthConfig};
use crate::error::{Error, Result};
use crate::rng;

/// One placed primitive. Positions are top-left corners in (row, col).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlacedElement {
    /// A single glyph bitmap (body marker).
    Stamp {
        row: usize,
        col: usize,
        scale: f64,
        stamp_idx: usize,
    },
    /// Two cross glyphs joined by a dashed connector. `a` and `b` are the
    /// top-left corners of the two crosses; both use the same stamp, so the
    /// distance between corners equals the distance between centers.
    CrossPair {
        a: (usize, usize),
        b: (usize, usize),
        scale: f64,
        stamp_idx: usize,
    },
    /// Axis-aligned rectangle outline.
    RectBorder {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
        border: usize,
        color_idx: usize,
    },
}

/// A sampled annotation layout for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub kind: AnnotationKind,
    pub elements: Vec<PlacedElement>,
    /// Seed of the generator that produced this placement.
    pub rng_seed: u64,
}

/// Placement sampler parameterized by a [`SynthConfig`].
#[derive(Debug, Clone, Default)]
pub struct Sampler {
    config: SynthConfig,
}

/// Attempts before giving up on the radial-line distance constraint.
const MAX_REJECTION_TRIES: usize = 10_000;

impl Sampler {
    pub fn new(config: SynthConfig) -> Self {
        Sampler { config }
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    /// Sample a placement using explicit stamp dimensions (stamp index 0).
    ///
    /// Positions are uniform over every top-left corner that keeps the
    /// footprint inside the image.
    pub fn sample_placement(
        &self,
        kind: AnnotationKind,
        image_dims: (usize, usize),
        stamp_dims: (usize, usize),
        rng: &mut impl RngCore,
    ) -> Result<Placement> {
        self.sample_with(kind, image_dims, &[stamp_dims], rng)
    }

    /// Sample a placement choosing stamps uniformly from `library`.
    pub fn sample_from_library(
        &self,
        kind: AnnotationKind,
        image_dims: (usize, usize),
        library: &StampLibrary,
        rng: &mut impl RngCore,
    ) -> Result<Placement> {
        library.require_kind(kind)?;
        let dims: Vec<(usize, usize)> = library
            .for_kind(kind)
            .iter()
            .map(|s| s.nominal_size())
            .collect();
        let dims = if dims.is_empty() { vec![(1, 1)] } else { dims };
        self.sample_with(kind, image_dims, &dims, rng)
    }

    fn sample_with(
        &self,
        kind: AnnotationKind,
        image_dims: (usize, usize),
        stamp_dims: &[(usize, usize)],
        rng: &mut impl RngCore,
    ) -> Result<Placement> {
        let seed_marker = rng.next_u64();
        let mut elements = Vec::new();
        match kind {
            AnnotationKind::BodyMarker => {
                let stamp_idx = rng::uniform_usize(rng, stamp_dims.len());
                let scale = self.sample_scale(rng);
                let (h, w) = scaled_dims(stamp_dims[stamp_idx], scale);
                let (row, col) = sample_corner(image_dims, (h, w), rng)?;
                elements.push(PlacedElement::Stamp {
                    row,
                    col,
                    scale,
                    stamp_idx,
                });
            }
            AnnotationKind::RadialLine => {
                let pairs = 1 + rng::weighted_index(rng, &self.config.pair_count_weights);
                let d_min = self.config.endpoint_dist_min;
                let d_max = self
                    .config
                    .endpoint_dist_max
                    .unwrap_or(image_dims.0.min(image_dims.1) as f64 / 2.0);
                for _ in 0..pairs {
                    let stamp_idx = rng::uniform_usize(rng, stamp_dims.len());
                    let scale = self.sample_scale(rng);
                    let dims = scaled_dims(stamp_dims[stamp_idx], scale);
                    let (a, b) =
                        sample_endpoint_pair(image_dims, dims, d_min, d_max, rng)?;
                    elements.push(PlacedElement::CrossPair {
                        a,
                        b,
                        scale,
                        stamp_idx,
                    });
                }
            }
            AnnotationKind::VascularFlow => {
                let (img_h, img_w) = image_dims;
                let (f_lo, f_hi) = self.config.rect_side_frac;
                let height = sample_side(img_h, f_lo, f_hi, rng)?;
                let width = sample_side(img_w, f_lo, f_hi, rng)?;
                let (row, col) = sample_corner(image_dims, (height, width), rng)?;
                let border = self.config.border_widths
                    [rng::uniform_usize(rng, self.config.border_widths.len())];
                let color_idx = rng::uniform_usize(rng, self.config.palette.len());
                elements.push(PlacedElement::RectBorder {
                    row,
                    col,
                    height,
                    width,
                    border,
                    color_idx,
                });
            }
        }
        Ok(Placement {
            kind,
            elements,
            rng_seed: seed_marker,
        })
    }

    fn sample_scale(&self, rng: &mut impl RngCore) -> f64 {
        let (lo, hi) = self.config.scale_range;
        if lo == hi {
            lo
        } else {
            lo + rng::uniform_f64(rng) * (hi - lo)
        }
    }
}

/// Sample a placement with the default configuration.
pub fn sample_placement(
    kind: AnnotationKind,
    image_dims: (usize, usize),
    stamp_dims: (usize, usize),
    rng: &mut impl RngCore,
) -> Result<Placement> {
    Sampler::default().sample_placement(kind, image_dims, stamp_dims, rng)
}

fn scaled_dims((h, w): (usize, usize), scale: f64) -> (usize, usize) {
    if scale == 1.0 {
        (h, w)
    } else {
        (
            ((h as f64 * scale).round() as usize).max(1),
            ((w as f64 * scale).round() as usize).max(1),
        )
    }
}

/// Uniform top-left corner keeping an (h, w) footprint inside the image.
fn sample_corner(
    (img_h, img_w): (usize, usize),
    (h, w): (usize, usize),
    rng: &mut impl RngCore,
) -> Result<(usize, usize)> {
    if h > img_h || w > img_w {
        return Err(Error::validation(format!(
            "stamp footprint {h}x{w} exceeds image {img_h}x{img_w}"
        )));
    }
    let row = rng::uniform_range(rng, 0, img_h - h);
    let col = rng::uniform_range(rng, 0, img_w - w);
    Ok((row, col))
}

/// Rejection-sample two in-bounds corners whose distance lies in
/// `[d_min, d_max]`. Acceptance keeps the distribution uniform over the
/// constrained set.
fn sample_endpoint_pair(
    image_dims: (usize, usize),
    stamp_dims: (usize, usize),
    d_min: f64,
    d_max: f64,
    rng: &mut impl RngCore,
) -> Result<((usize, usize), (usize, usize))> {
    let domain_h = image_dims.0.checked_sub(stamp_dims.0).ok_or_else(|| {
        Error::validation("cross stamp taller than image")
    })?;
    let domain_w = image_dims.1.checked_sub(stamp_dims.1).ok_or_else(|| {
        Error::validation("cross stamp wider than image")
    })?;
    let diag = ((domain_h * domain_h + domain_w * domain_w) as f64).sqrt();
    if diag < d_min {
        return Err(Error::validation(format!(
            "image too small for endpoint distance >= {d_min} px"
        )));
    }
    for _ in 0..MAX_REJECTION_TRIES {
        let a = sample_corner(image_dims, stamp_dims, rng)?;
        let b = sample_corner(image_dims, stamp_dims, rng)?;
        let dr = a.0 as f64 - b.0 as f64;
        let dc = a.1 as f64 - b.1 as f64;
        let d = (dr * dr + dc * dc).sqrt();
        if d >= d_min && d <= d_max {
            return Ok((a, b));
        }
    }
    Err(Error::validation(format!(
        "could not place endpoint pair with distance in [{d_min}, {d_max}]"
    )))
}

impl Placement {
    /// Check that every footprint lies inside `image_dims` given the stamp
    /// dimensions the placement was sampled against.
    pub fn validate(
        &self,
        image_dims: (usize, usize),
        stamp_dims_of: impl Fn(usize) -> (usize, usize),
    ) -> Result<()> {
        let (img_h, img_w) = image_dims;
        let check = |row: usize, col: usize, h: usize, w: usize| -> Result<()> {
            if row + h > img_h || col + w > img_w {
                return Err(Error::validation(format!(
                    "element at ({row}, {col}) with footprint {h}x{w} exceeds image {img_h}x{img_w}"
                )));
            }
            Ok(())
        };
        if matches!(self.kind, AnnotationKind::RadialLine) {
            let pairs = self
                .elements
                .iter()
                .filter(|e| matches!(e, PlacedElement::CrossPair { .. }))
                .count();
            if !(1..=3).contains(&pairs) {
                return Err(Error::validation(format!(
                    "radial line placement must contain 1-3 pairs, got {pairs}"
                )));
            }
        }
        for el in &self.elements {
            match *el {
                PlacedElement::Stamp {
                    row,
                    col,
                    scale,
                    stamp_idx,
                } => {
                    let (h, w) = scaled_dims(stamp_dims_of(stamp_idx), scale);
                    check(row, col, h, w)?;
                }
                PlacedElement::CrossPair {
                    a,
                    b,
                    scale,
                    stamp_idx,
                } => {
                    let (h, w) = scaled_dims(stamp_dims_of(stamp_idx), scale);
                    check(a.0, a.1, h, w)?;
                    check(b.0, b.1, h, w)?;
                }
                PlacedElement::RectBorder {
                    row,
                    col,
                    height,
                    width,
                    ..
                } => {
                    check(row, col, height, width)?;
                }
            }
        }
        Ok(())
    }
}

fn sample_side(dim: usize, f_lo: f64, f_hi: f64, rng: &mut impl RngCore) -> Result<usize> {
    let lo = ((dim as f64 * f_lo).round() as usize).max(1);
    let hi = ((dim as f64 * f_hi).round() as usize).max(lo).min(dim);
    if lo > hi {
        return Err(Error::validation(format!(
            "no valid rectangle side for dim {dim} with fractions [{f_lo}, {f_hi}]"
        )));
    }
    Ok(rng::uniform_range(rng, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn body_marker_corner_is_uniform_over_valid_range() {
        let mut rng = seeded(5);
        let mut max_row = 0;
        let mut max_col = 0;
        for _ in 0..2_000 {
            let p = sample_placement(AnnotationKind::BodyMarker, (256, 256), (32, 32), &mut rng)
                .unwrap();
            match p.elements[0] {
                PlacedElement::Stamp { row, col, .. } => {
                    assert!(row <= 224 && col <= 224);
                    max_row = max_row.max(row);
                    max_col = max_col.max(col);
                }
                _ => panic!("expected stamp"),
            }
        }
        // The extremes of [0, 224] are actually reachable.
        assert!(max_row > 220 && max_col > 220);
    }

    #[test]
    fn radial_line_pair_count_and_distance_bounds() {
        let mut rng = seeded(9);
        let sampler = Sampler::default();
        let mut counts = [0usize; 3];
        for _ in 0..600 {
            let p = sampler
                .sample_placement(AnnotationKind::RadialLine, (128, 128), (11, 11), &mut rng)
                .unwrap();
            let pairs: Vec<_> = p
                .elements
                .iter()
                .filter_map(|e| match e {
                    PlacedElement::CrossPair { a, b, .. } => Some((*a, *b)),
                    _ => None,
                })
                .collect();
            assert!((1..=3).contains(&pairs.len()));
            counts[pairs.len() - 1] += 1;
            for (a, b) in pairs {
                let d = (((a.0 as f64 - b.0 as f64).powi(2))
                    + ((a.1 as f64 - b.1 as f64).powi(2)))
                .sqrt();
                assert!((16.0..=64.0).contains(&d), "distance {d}");
            }
        }
        // Two pairs should dominate under the (0.25, 0.5, 0.25) weights.
        assert!(counts[1] > counts[0] && counts[1] > counts[2], "{counts:?}");
    }

    #[test]
    fn same_seed_gives_identical_placement() {
        for kind in AnnotationKind::ALL {
            let a = sample_placement(kind, (96, 96), (11, 11), &mut seeded(1234)).unwrap();
            let b = sample_placement(kind, (96, 96), (11, 11), &mut seeded(1234)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn oversized_stamp_errors() {
        let err =
            sample_placement(AnnotationKind::BodyMarker, (16, 16), (32, 32), &mut seeded(0))
                .unwrap_err();
        assert!(err.to_string().contains("exceeds image"));
    }

    #[test]
    fn vascular_rect_sides_respect_fractions() {
        let mut rng = seeded(21);
        for _ in 0..300 {
            let p = sample_placement(AnnotationKind::VascularFlow, (100, 200), (1, 1), &mut rng)
                .unwrap();
            match p.elements[0] {
                PlacedElement::RectBorder {
                    row,
                    col,
                    height,
                    width,
                    border,
                    ..
                } => {
                    assert!((20..=60).contains(&height), "height {height}");
                    assert!((40..=120).contains(&width), "width {width}");
                    assert!(row + height <= 100 && col + width <= 200);
                    assert!((1..=3).contains(&border));
                }
                _ => panic!("expected rect"),
            }
        }
    }
}
