//! RMSprop.
//!
//! The cited formulation: gradients are divided by the square root of an
//! exponential moving average of their squares, with optional momentum on
//! the normalized step and additive L2 weight decay folded into the
//! gradient. State lives in two buffers shaped like the parameters and is
//! serialized into checkpoints so resumed runs continue bit-exactly.

use serde::{Deserialize, Serialize};

use crate::model::{GradSet, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RmspropConfig {
    pub learning_rate: f64,
    /// Smoothing constant of the squared-gradient average.
    pub alpha: f64,
    pub eps: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for RmspropConfig {
    fn default() -> Self {
        RmspropConfig {
            learning_rate: 1e-5,
            alpha: 0.99,
            eps: 1e-8,
            momentum: 0.9,
            weight_decay: 1e-8,
        }
    }
}

#[derive(Clone)]
pub struct Rmsprop {
    pub config: RmspropConfig,
    square_avg: ParamSet,
    momentum_buf: ParamSet,
}

impl Rmsprop {
    pub fn new(config: RmspropConfig, params: &ParamSet) -> Rmsprop {
        Rmsprop {
            config,
            square_avg: params.zeros_like(),
            momentum_buf: params.zeros_like(),
        }
    }

    /// One update: `v ← αv + (1-α)g²`, `step ← g / (√v + ε)` with momentum,
    /// `p ← p − lr·step`. Weight decay adds `wd·p` to the raw gradient.
    pub fn step(&mut self, params: &mut ParamSet, grads: &GradSet) {
        let lr = self.config.learning_rate as f32;
        let alpha = self.config.alpha as f32;
        let eps = self.config.eps as f32;
        let mu = self.config.momentum as f32;
        let wd = self.config.weight_decay as f32;
        for (i, grad_entry) in grads.iter().enumerate() {
            let sq = self.square_avg.value_mut(i);
            let sq_slice = sq.as_slice_mut().expect("state is contiguous");
            let buf_slice = self.momentum_buf.value_mut(i);
            let buf_slice = buf_slice.as_slice_mut().expect("state is contiguous");
            let p = params.value_mut(i);
            let p_slice = p.as_slice_mut().expect("params are contiguous");
            let g_slice = grad_entry.value.as_slice().expect("grads are contiguous");
            for j in 0..p_slice.len() {
                let g = g_slice[j] + wd * p_slice[j];
                let v = alpha * sq_slice[j] + (1.0 - alpha) * g * g;
                sq_slice[j] = v;
                let normalized = g / (v.sqrt() + eps);
                let step = if mu > 0.0 {
                    let b = mu * buf_slice[j] + normalized;
                    buf_slice[j] = b;
                    b
                } else {
                    normalized
                };
                p_slice[j] -= lr * step;
            }
        }
    }

    pub fn state(&self) -> (&ParamSet, &ParamSet) {
        (&self.square_avg, &self.momentum_buf)
    }

    pub fn load_state(
        &mut self,
        square_avg: &ParamSet,
        momentum_buf: &ParamSet,
    ) -> crate::error::Result<()> {
        self.square_avg.load_from(square_avg)?;
        self.momentum_buf.load_from(momentum_buf)
    }
}
