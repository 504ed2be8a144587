//! Metric aggregation and report formatting.

use serde::{Deserialize, Serialize};

/// Mean and population variance of one metric over the evaluated records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub var: f64,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, var }
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3}±{:.3}", self.mean, self.var)
    }
}

/// Per-metric averages and variances over one evaluated split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_samples: usize,
    pub dice: Stat,
    pub iou: Stat,
    pub pa: Stat,
    pub ssim: Stat,
    pub psnr_hvs_m: Stat,
    /// Hash of everything that determines this report: dataset seed, split,
    /// threshold and the evaluated restorer.
    pub config_fingerprint: String,
}

/// One table row: method name, training mode label and its report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub mode: String,
    pub report: MetricReport,
}

pub const CSV_HEADER: &str = "method,mode,n_samples,dice_mean,dice_var,iou_mean,iou_var,\
pa_mean,pa_var,ssim_mean,ssim_var,psnr_hvs_m_mean,psnr_hvs_m_var,config_fingerprint";

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.mode,
            r.n_samples,
            r.dice.mean,
            r.dice.var,
            r.iou.mean,
            r.iou.var,
            r.pa.mean,
            r.pa.var,
            r.ssim.mean,
            r.ssim.var,
            r.psnr_hvs_m.mean,
            r.psnr_hvs_m.var,
            r.config_fingerprint
        )
    }
}

/// Render rows as an aligned text table in the published layout: method,
/// training mode, then `mean±var` per metric.
pub fn format_table(rows: &[ReportRow]) -> String {
    let headers = [
        "Method",
        "Training Mode",
        "Dice",
        "IoU",
        "PA",
        "SSIM",
        "PSNR_HVS_M",
    ];
    let mut cells: Vec<[String; 7]> = Vec::with_capacity(rows.len());
    for row in rows {
        let r = &row.report;
        cells.push([
            row.method.clone(),
            row.mode.clone(),
            r.dice.to_string(),
            r.iou.to_string(),
            r.pa.to_string(),
            r.ssim.to_string(),
            r.psnr_hvs_m.to_string(),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cols: &[String]| {
        for (i, (cell, w)) in cols.iter().zip(widths.iter()).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            for _ in cell.chars().count()..*w {
                out.push(' ');
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    let header_cells: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
    emit(&mut out, &header_cells);
    for row in cells {
        emit(&mut out, &row);
    }
    out
}
