//! Annotation removal for ultrasound-style images.
//!
//! The pipeline treats on-screen annotations (body markers, radial
//! measurement lines, vascular-flow boxes) as structured noise stamped onto
//! otherwise clean frames. From a small set of clean images it synthesizes
//! paired noisy datasets, trains a shape-preserving U-Net either
//! noisy-to-noisy or noisy-to-clean, and scores the result both as a
//! segmentation problem (Dice / IoU / pixel accuracy on the recovered noise
//! mask) and as a reconstruction problem (SSIM, PSNR-HVS-M).
//!
//! Modules follow the pipeline stages:
//!
//! * [`synth`] — annotation glyphs, placement sampling, rasterization and
//!   alpha compositing.
//! * [`datagen`] — reproducible dataset construction: sample tuples on disk,
//!   manifest, normalization statistics, grouped splits.
//! * [`model`] — the customized U-Net, parameter containers and the
//!   architecture registry.
//! * [`train`] — loss functions, RMSprop, the training loop, loss curves and
//!   checkpoints.
//! * [`metrics`] — difference segmentation, overlap scores, SSIM,
//!   PSNR-HVS-M and report aggregation.
//!
//! Everything that consumes randomness takes an explicit seed and is
//! bit-reproducible for a fixed build.

pub mod datagen;
pub mod error;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use synth::{AnnotationKind, AnnotationStamp, Image, Overlay, Placement};
