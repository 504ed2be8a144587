//! Evaluation metrics.
//!
//! Denoising quality is scored two ways: as segmentation — threshold the
//! input/output difference and compare the recovered noise mask against the
//! ground-truth mask with Dice, IoU and pixel accuracy — and as
//! reconstruction — SSIM and PSNR-HVS-M between the restored image and the
//! clean original. All metric functions are pure and deterministic.

pub mod dct;
mod evaluate;
mod report;
mod seg;
mod ssim;

pub use evaluate::{evaluate, EvalOptions, IdentityRestorer, PerfectRestorer, Restorer};
pub use report::{format_table, MetricReport, ReportRow, Stat, CSV_HEADER};
pub use seg::{dice, extract_segmentation, iou, pixel_accuracy, BinaryMask, DEFAULT_TAU};
pub use ssim::{ssim, ssim_luma, SsimParams};

mod psnr_hvs_m;
pub use psnr_hvs_m::{psnr_hvs_m, psnr_hvs_m_luma, PSNR_CAP_DB};
