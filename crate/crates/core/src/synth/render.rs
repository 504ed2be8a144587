//! Rasterization of placements and source-over compositing.

use ndarray::{Array2, Array3};

use super::{AnnotationKind, Image, PlacedElement, Placement, StampLibrary, SynthConfig};
use crate::error::{Error, Result};

/// A rendered annotation layer.
///
/// `layer` holds premultiplied RGB plus alpha; `mask` is 1 exactly where the
/// layer alpha is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    layer: Array3<f32>,
    mask: Array2<u8>,
}

impl Overlay {
    pub fn empty(h: usize, w: usize) -> Overlay {
        Overlay {
            layer: Array3::zeros((h, w, 4)),
            mask: Array2::zeros((h, w)),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        let (h, w, _) = self.layer.dim();
        (h, w)
    }

    /// Premultiplied RGBA layer.
    pub fn layer(&self) -> &Array3<f32> {
        &self.layer
    }

    /// Binary support of the layer alpha.
    pub fn mask(&self) -> &Array2<u8> {
        &self.mask
    }

    fn rebuild_mask(&mut self) {
        let (h, w) = self.dims();
        for i in 0..h {
            for j in 0..w {
                self.mask[(i, j)] = u8::from(self.layer[(i, j, 3)] > 0.0);
            }
        }
    }
}

/// Rasterize a placement into an overlay.
///
/// Body markers blit one stamp; radial lines blit a cross stamp at both
/// endpoints of each pair and join their centers with a 1-px dashed line;
/// vascular flow draws a rectangle outline of the placed border width.
pub fn render_annotation(
    placement: &Placement,
    library: &StampLibrary,
    image_dims: (usize, usize),
    config: &SynthConfig,
) -> Result<Overlay> {
    let stamps = library.for_kind(placement.kind);
    if placement.kind != AnnotationKind::VascularFlow && stamps.is_empty() {
        return Err(Error::config(format!(
            "no stamps available for kind `{}`",
            placement.kind
        )));
    }
    placement.validate(image_dims, |idx| {
        stamps
            .get(idx)
            .map(|s| s.nominal_size())
            .unwrap_or((usize::MAX, usize::MAX))
    })?;

    let (h, w) = image_dims;
    let mut overlay = Overlay::empty(h, w);
    for el in &placement.elements {
        match *el {
            PlacedElement::Stamp {
                row,
                col,
                scale,
                stamp_idx,
            } => {
                let stamp = stamps[stamp_idx].scaled(scale);
                blit(&mut overlay.layer, stamp.pixels(), row, col);
            }
            PlacedElement::CrossPair {
                a,
                b,
                scale,
                stamp_idx,
            } => {
                let stamp = stamps[stamp_idx].scaled(scale);
                let color = stamp.dominant_color();
                blit(&mut overlay.layer, stamp.pixels(), a.0, a.1);
                blit(&mut overlay.layer, stamp.pixels(), b.0, b.1);
                let (sh, sw) = stamp.nominal_size();
                let ca = (a.0 + sh / 2, a.1 + sw / 2);
                let cb = (b.0 + sh / 2, b.1 + sw / 2);
                draw_dashed_line(&mut overlay.layer, ca, cb, color, config.dash);
            }
            PlacedElement::RectBorder {
                row,
                col,
                height,
                width,
                border,
                color_idx,
            } => {
                let color = config.palette[color_idx.min(config.palette.len() - 1)];
                draw_rect_border(&mut overlay.layer, row, col, height, width, border, color);
            }
        }
    }
    overlay.rebuild_mask();
    Ok(overlay)
}

/// Source-over blend of the overlay onto a clean image.
///
/// Per pixel: `noisy = premult_color + (1 - alpha) * clean`. Pixels with
/// zero alpha reproduce the clean image bit-exactly. Returns the noisy image
/// and a copy of the overlay mask.
pub fn composite(clean: &Image, overlay: &Overlay) -> Result<(Image, Array2<u8>)> {
    let (h, w) = clean.dims();
    if overlay.dims() != (h, w) {
        return Err(Error::validation(format!(
            "overlay dims {:?} do not match image dims {:?}",
            overlay.dims(),
            (h, w)
        )));
    }
    let clean_px = clean.pixels();
    let layer = overlay.layer();
    let mut out = clean_px.clone();
    for i in 0..h {
        for j in 0..w {
            let alpha = layer[(i, j, 3)];
            if alpha <= 0.0 {
                continue;
            }
            let keep = 1.0 - alpha;
            for c in 0..3 {
                let v = layer[(i, j, c)] + keep * clean_px[(i, j, c)];
                out[(i, j, c)] = v.clamp(0.0, 1.0);
            }
        }
    }
    Ok((Image::new(out)?, overlay.mask().clone()))
}

/// Source-over blend of straight-alpha `src` onto the premultiplied canvas.
fn blit(canvas: &mut Array3<f32>, src: &Array3<f32>, row: usize, col: usize) {
    let (sh, sw, _) = src.dim();
    for i in 0..sh {
        for j in 0..sw {
            let sa = src[(i, j, 3)];
            if sa <= 0.0 {
                continue;
            }
            let (di, dj) = (row + i, col + j);
            let keep = 1.0 - sa;
            for c in 0..3 {
                canvas[(di, dj, c)] = src[(i, j, c)] * sa + canvas[(di, dj, c)] * keep;
            }
            canvas[(di, dj, 3)] = sa + canvas[(di, dj, 3)] * keep;
        }
    }
}

fn put_opaque(canvas: &mut Array3<f32>, i: usize, j: usize, color: [f32; 3]) {
    canvas[(i, j, 0)] = color[0];
    canvas[(i, j, 1)] = color[1];
    canvas[(i, j, 2)] = color[2];
    canvas[(i, j, 3)] = 1.0;
}

/// Bresenham line with an (on, off) dash pattern, 1 px wide, fully opaque.
fn draw_dashed_line(
    canvas: &mut Array3<f32>,
    a: (usize, usize),
    b: (usize, usize),
    color: [f32; 3],
    (on, off): (usize, usize),
) {
    let period = (on + off).max(1);
    let (mut r0, mut c0) = (a.0 as isize, a.1 as isize);
    let (r1, c1) = (b.0 as isize, b.1 as isize);
    let dr = (r1 - r0).abs();
    let dc = (c1 - c0).abs();
    let sr = if r0 < r1 { 1 } else { -1 };
    let sc = if c0 < c1 { 1 } else { -1 };
    let mut err = dc - dr;
    let (h, w, _) = canvas.dim();
    let mut t = 0usize;
    loop {
        if t % period < on && (r0 as usize) < h && (c0 as usize) < w {
            put_opaque(canvas, r0 as usize, c0 as usize, color);
        }
        if r0 == r1 && c0 == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dr {
            err -= dr;
            c0 += sc;
        }
        if e2 < dc {
            err += dc;
            r0 += sr;
        }
        t += 1;
    }
}

/// Rectangle outline: the set difference of the outer rectangle and the
/// inner rectangle shrunk by `border` on each side.
fn draw_rect_border(
    canvas: &mut Array3<f32>,
    row: usize,
    col: usize,
    height: usize,
    width: usize,
    border: usize,
    color: [f32; 3],
) {
    for i in 0..height {
        for j in 0..width {
            let inner = i >= border
                && j >= border
                && i + border < height
                && j + border < width;
            if !inner {
                put_opaque(canvas, row + i, col + j, color);
            }
        }
    }
}
