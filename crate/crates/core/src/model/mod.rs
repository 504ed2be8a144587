//! Model architectures and the registry that names them.
//!
//! The workhorse is [`unet::CustomUnet`], a shape-preserving U-Net that uses
//! strided convolutions instead of pooling and transposed convolutions for
//! upsampling, so output dimensions match input dimensions exactly.
//! Alternative architectures plug in through the [`registry`]; a trivial
//! one-parameter [`bias::GlobalBias`] network exists for closed-form
//! training checks.

pub mod bias;
pub mod nn;
mod params;
mod registry;
pub mod unet;

pub use params::{GradSet, ParamEntry, ParamSet};
pub use registry::{global_registry, lookup_architecture, register_architecture, Registry};

use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters. The fixed parts of the recipe — 3×3
/// stride-1 pad-1 convolution pairs per level, stride-2 convolutions for
/// downsampling, transposed stride-2 convolutions for upsampling, skip
/// concatenation, linear 1×1 output head — live in the architecture itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    /// Registered architecture name.
    pub arch: String,
    /// Number of downsampling stages; spatial dims must divide 2^depth.
    pub depth: usize,
    /// Channels at full resolution.
    pub base_channels: usize,
    /// Channel growth per downsampling, capped after the last encoder level.
    pub channel_multiplier: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// Negative slope of the leaky ReLU activations.
    pub leaky_slope: f32,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            arch: "custom_unet".into(),
            depth: 4,
            base_channels: 48,
            channel_multiplier: 2,
            in_channels: 3,
            out_channels: 3,
            leaky_slope: 0.1,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::validation("model depth must be at least 1"));
        }
        if self.base_channels == 0 || self.channel_multiplier == 0 {
            return Err(Error::validation(
                "base_channels and channel_multiplier must be at least 1",
            ));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::validation("channel counts must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.leaky_slope) {
            return Err(Error::validation("leaky_slope must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Channels at downsampling scale `s`; growth stops after the deepest
    /// encoder level so the bottleneck matches the last skip width.
    pub fn channels_at(&self, scale: usize) -> usize {
        let capped = scale.min(self.depth.saturating_sub(1)) as u32;
        self.base_channels * self.channel_multiplier.pow(capped)
    }
}

/// How forward handles spatial dims that violate the architecture's
/// divisibility constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingPolicy {
    /// Reflection-pad up to the next valid size, crop the output back.
    #[default]
    ReflectPad,
    /// Reject invalid dims with an error.
    Strict,
}

/// A network: named parameters plus forward and forward/backward passes.
///
/// `forward` is read-only and safe to call concurrently; training mutates
/// parameters through [`Network::params_mut`] and needs exclusive access.
pub trait Network: Send + Sync {
    fn arch_name(&self) -> &str;
    fn spec(&self) -> &ModelSpec;
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;

    /// Spatial dims must be divisible by this.
    fn dim_divisor(&self) -> usize;

    /// Raw forward pass on an NCHW batch whose dims satisfy
    /// [`Network::dim_divisor`]. Output is unclamped.
    fn forward(&self, batch: &Array4<f32>) -> Result<Array4<f32>>;

    /// Forward plus backward. `loss_grad` receives the unclamped batch
    /// output and returns the scalar loss together with d(loss)/d(output).
    fn forward_backward(
        &self,
        batch: &Array4<f32>,
        loss_grad: &mut dyn FnMut(&Array4<f32>) -> (f64, Array4<f32>),
    ) -> Result<(f64, GradSet)>;

    fn clone_box(&self) -> Box<dyn Network>;
}

impl Clone for Box<dyn Network> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Provenance of a trained parameter set, stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub scheme: String,
    pub loss: String,
    pub normalization: String,
    pub epochs: u64,
    pub seed: u64,
}

/// An architecture instance plus its parameters and training provenance.
#[derive(Clone)]
pub struct TrainedModel {
    pub net: Box<dyn Network>,
    pub meta: TrainingMeta,
}

impl std::fmt::Debug for TrainedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainedModel")
            .field("arch", &self.net.arch_name())
            .field("parameters", &self.net.params().total_elements())
            .field("meta", &self.meta)
            .finish()
    }
}

impl TrainedModel {
    pub fn new(net: Box<dyn Network>) -> TrainedModel {
        TrainedModel {
            net,
            meta: TrainingMeta::default(),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        self.net.spec()
    }

    pub fn params(&self) -> &ParamSet {
        self.net.params()
    }

    /// Forward with the padding policy applied; output is clamped to
    /// `[0, 1]` when `clamp` is set (inference) and left raw otherwise.
    pub fn forward(
        &self,
        batch: &Array4<f32>,
        policy: PaddingPolicy,
        clamp: bool,
    ) -> Result<Array4<f32>> {
        let div = self.net.dim_divisor();
        let (_, _, h, w) = batch.dim();
        let mut out = if h % div == 0 && w % div == 0 {
            self.net.forward(batch)?
        } else {
            match policy {
                PaddingPolicy::Strict => {
                    return Err(Error::validation(format!(
                        "dims must be divisible by {div}, got {h}x{w}"
                    )))
                }
                PaddingPolicy::ReflectPad => {
                    let th = h.div_ceil(div) * div;
                    let tw = w.div_ceil(div) * div;
                    let pads_h = ((th - h) / 2, th - h - (th - h) / 2);
                    let pads_w = ((tw - w) / 2, tw - w - (tw - w) / 2);
                    let padded = nn::reflect_pad(batch, pads_h, pads_w);
                    let y = self.net.forward(&padded)?;
                    nn::crop(&y, pads_h, pads_w, h, w)
                }
            }
        };
        if clamp {
            out.mapv_inplace(|v| v.clamp(0.0, 1.0));
        }
        Ok(out)
    }
}

/// Build an untrained model of `spec.arch` with parameters drawn
/// deterministically from `init_seed`.
pub fn build_model(spec: &ModelSpec, init_seed: u64) -> Result<TrainedModel> {
    let builder = lookup_architecture(&spec.arch)?;
    builder(spec, init_seed)
}
