//! Static PNG charts for loss curves, rendered without any plotting
//! dependency: axes, tick labels in the embedded micro font, polyline
//! curves and a legend.

use std::path::Path;

use annoclean_core::{Error, Result};
use image::{Rgb, RgbImage};

use crate::font;

pub struct Curve {
    pub label: String,
    pub points: Vec<(u64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub curves: Vec<Curve>,
}

const COLORS: [[u8; 3]; 8] = [
    [214, 69, 65],   // red
    [31, 119, 180],  // blue
    [44, 160, 44],   // green
    [255, 127, 14],  // orange
    [148, 103, 189], // purple
    [23, 190, 207],  // teal
    [140, 86, 75],   // brown
    [127, 127, 127], // gray
];

const PANEL_W: u32 = 620;
const PANEL_H: u32 = 460;
const MARGIN_L: u32 = 64;
const MARGIN_R: u32 = 16;
const MARGIN_T: u32 = 40;
const MARGIN_B: u32 = 48;

fn put(img: &mut RgbImage, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(color));
    }
}

fn draw_line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), color: [u8; 3]) {
    let (mut x0, mut y0) = a;
    let (x1, y1) = b;
    let dx = (x1 - x0).abs();
    let dy = (y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx - dy;
    loop {
        put(img, x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dy {
            err -= dy;
            x0 += sx;
        }
        if e2 < dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn draw_text(img: &mut RgbImage, x: i64, y: i64, text: &str, color: [u8; 3]) {
    let mut cx = x;
    for c in text.chars() {
        let rows = font::glyph(c.to_ascii_lowercase());
        for (ry, row) in rows.iter().enumerate() {
            for bit in 0..font::GLYPH_W {
                if row & (1 << (font::GLYPH_W - 1 - bit)) != 0 {
                    put(img, cx + bit as i64, y + ry as i64, color);
                }
            }
        }
        cx += font::GLYPH_W as i64 + 1;
    }
}

fn text_width(text: &str) -> i64 {
    (text.chars().count() * (font::GLYPH_W + 1)) as i64
}

/// Compact numeric label.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 || v.abs() < 0.001 {
        format!("{v:.1e}")
    } else if v.abs() >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn render_panel(img: &mut RgbImage, x0: u32, panel: &Panel) {
    let black = [0u8, 0, 0];
    let gray = [200u8, 200, 200];
    let plot_x0 = (x0 + MARGIN_L) as i64;
    let plot_y0 = MARGIN_T as i64;
    let plot_w = (PANEL_W - MARGIN_L - MARGIN_R) as i64;
    let plot_h = (PANEL_H - MARGIN_T - MARGIN_B) as i64;

    // Data ranges.
    let mut x_max = 1u64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for c in &panel.curves {
        for &(s, v) in &c.points {
            x_max = x_max.max(s);
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);

    let sx = |s: u64| plot_x0 + (s as f64 / x_max as f64 * plot_w as f64) as i64;
    let sy = |v: f64| plot_y0 + plot_h - ((v - y_lo) / (y_hi - y_lo) * plot_h as f64) as i64;

    // Frame and ticks.
    draw_line(img, (plot_x0, plot_y0), (plot_x0, plot_y0 + plot_h), black);
    draw_line(
        img,
        (plot_x0, plot_y0 + plot_h),
        (plot_x0 + plot_w, plot_y0 + plot_h),
        black,
    );
    for t in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * t as f64 / 4.0;
        let y = sy(v);
        draw_line(img, (plot_x0 - 3, y), (plot_x0, y), black);
        draw_line(img, (plot_x0, y), (plot_x0 + plot_w, y), gray);
        let label = fmt_tick(v);
        draw_text(img, plot_x0 - 6 - text_width(&label), y - 3, &label, black);

        let s = (x_max as f64 * t as f64 / 4.0) as u64;
        let x = sx(s);
        let ybase = plot_y0 + plot_h;
        draw_line(img, (x, ybase), (x, ybase + 3), black);
        let label = fmt_tick(s as f64);
        draw_text(img, x - text_width(&label) / 2, ybase + 6, &label, black);
    }
    draw_text(
        img,
        plot_x0 + plot_w / 2 - text_width("step") / 2,
        plot_y0 + plot_h + 22,
        "step",
        black,
    );
    draw_text(img, x0 as i64 + 8, plot_y0 - 20, &panel.title, black);
    draw_text(img, x0 as i64 + 6, plot_y0 + plot_h / 2 - 4, "loss", black);

    // Curves and legend.
    for (ci, curve) in panel.curves.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let mut prev: Option<(i64, i64)> = None;
        for &(s, v) in &curve.points {
            let p = (sx(s), sy(v));
            if let Some(q) = prev {
                draw_line(img, q, p, color);
            }
            prev = Some(p);
        }
        let ly = plot_y0 + 6 + ci as i64 * (font::GLYPH_H as i64 + 4);
        let lx = plot_x0 + plot_w - 130;
        draw_line(img, (lx, ly + 3), (lx + 14, ly + 3), color);
        draw_text(img, lx + 18, ly, &curve.label, black);
    }
}

/// Render panels side by side into a PNG.
pub fn render(panels: &[Panel], path: &Path) -> Result<()> {
    if panels.is_empty() {
        return Err(Error::validation("no panels to plot"));
    }
    let w = PANEL_W * panels.len() as u32;
    let mut img = RgbImage::from_pixel(w, PANEL_H, Rgb([255, 255, 255]));
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut img, i as u32 * PANEL_W, panel);
    }
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
