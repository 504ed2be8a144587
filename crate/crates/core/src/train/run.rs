//! The training loop.

use ndarray::{Array4, Axis};
use serde::{Deserialize, Serialize};

use super::checkpoint::OptimizerState;
use super::{BatchSource, LossCurve, LossSpec, Rmsprop, RmspropConfig, Scheme};
use crate::datagen::NormalizationMode;
use crate::error::{Error, Result};
use crate::model::{TrainedModel, TrainingMeta};
use crate::rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub scheme: Scheme,
    pub loss: LossSpec,
    #[serde(default)]
    pub optimizer: RmspropConfig,
    /// Mandatory: there is no defensible default at full scale.
    pub batch_size: usize,
    /// Mandatory, same reason.
    pub epochs: usize,
    /// Optional cap on optimizer updates, for convergence profiling.
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Deterministic per-epoch visit order: a Fisher-Yates shuffle seeded from
/// (config seed, epoch).
pub fn epoch_order(n_records: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_records).collect();
    let mut rng = rng::seeded(rng::derive_seed(seed ^ 0x5455_FF1E, epoch));
    rng::shuffle(&mut rng, &mut order);
    order
}

/// Assemble one batch of inputs and targets in NCHW layout.
pub fn assemble_batch(
    source: &dyn BatchSource,
    indices: &[usize],
    scheme: Scheme,
) -> Result<(Array4<f32>, Array4<f32>)> {
    let (c, h, w) = source.dims();
    let n = indices.len();
    let mut inputs = Array4::zeros((n, c, h, w));
    let mut targets = Array4::zeros((n, c, h, w));
    for (slot, &idx) in indices.iter().enumerate() {
        let (input, target) = source.pair(idx, scheme)?;
        inputs.index_axis_mut(Axis(0), slot).assign(&input);
        targets.index_axis_mut(Axis(0), slot).assign(&target);
    }
    Ok((inputs, targets))
}

/// Called at the end of every epoch with the epoch number (1-based), the
/// current model, optimizer state and the accumulated curve.
pub type EpochHook<'a> =
    &'a mut dyn FnMut(usize, &TrainedModel, &OptimizerState, &LossCurve) -> Result<()>;

#[derive(Debug)]
pub struct TrainOutput {
    pub model: TrainedModel,
    pub curve: LossCurve,
}

/// Train from scratch. See [`train_resumed`] for continuing a checkpoint.
pub fn train(
    model: TrainedModel,
    source: &dyn BatchSource,
    config: &TrainConfig,
    on_epoch: Option<EpochHook>,
) -> Result<TrainOutput> {
    train_resumed(model, None, 0, source, config, on_epoch)
}

/// Run epochs `start_epoch..config.epochs` of the schedule defined by
/// `config`. With the optimizer state from a checkpoint this continues a
/// partial run exactly as if it had never stopped: per-epoch shuffles are
/// derived from (seed, epoch), not from a live generator.
pub fn train_resumed(
    mut model: TrainedModel,
    opt_state: Option<&OptimizerState>,
    start_epoch: usize,
    source: &dyn BatchSource,
    config: &TrainConfig,
    mut on_epoch: Option<EpochHook>,
) -> Result<TrainOutput> {
    config.validate()?;
    if source.is_empty() {
        return Err(Error::validation("training split is empty"));
    }
    if start_epoch > config.epochs {
        return Err(Error::validation(format!(
            "start epoch {start_epoch} beyond configured epochs {}",
            config.epochs
        )));
    }

    let n = source.len();
    let steps_per_epoch = n.div_ceil(config.batch_size) as u64;
    let mut optimizer = Rmsprop::new(config.optimizer, model.net.params());
    if let Some(state) = opt_state {
        optimizer.load_state(&state.square_avg, &state.momentum_buf)?;
    }

    let started = std::time::Instant::now();
    let mut curve = LossCurve::default();
    let mut step = start_epoch as u64 * steps_per_epoch;
    let step_cap = config.max_steps.unwrap_or(u64::MAX);

    'epochs: for epoch in start_epoch..config.epochs {
        let order = epoch_order(n, config.seed, epoch as u64);
        for chunk in order.chunks(config.batch_size) {
            if step >= step_cap {
                break 'epochs;
            }
            let (inputs, targets) = assemble_batch(source, chunk, config.scheme)?;
            let loss_spec = &config.loss;
            let (loss, grads) = model.net.forward_backward(&inputs, &mut |out| {
                loss_spec.eval_batch(out, &targets)
            })?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            optimizer.step(model.net.params_mut(), &grads);
            curve.push(step, loss);
            step += 1;
        }
        model.meta = TrainingMeta {
            scheme: config.scheme.to_string(),
            loss: config.loss.to_string(),
            normalization: config.normalization.to_string(),
            epochs: (epoch + 1) as u64,
            seed: config.seed,
        };
        if let Some(hook) = on_epoch.as_mut() {
            let (sq, mb) = optimizer.state();
            let state = OptimizerState {
                square_avg: sq.clone(),
                momentum_buf: mb.clone(),
            };
            curve.wall_clock_secs = started.elapsed().as_secs_f64();
            hook(epoch + 1, &model, &state, &curve)?;
        }
    }
    curve.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(TrainOutput { model, curve })
}
