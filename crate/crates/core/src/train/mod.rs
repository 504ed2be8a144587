//! Training: losses, RMSprop, the epoch loop, loss curves and checkpoints.
//!
//! Two schemes share the loop and differ only in the target image fed to
//! the loss: noisy-to-noisy pairs the input with an independently corrupted
//! sibling, noisy-to-clean pairs it with the original.

mod checkpoint;
mod curve;
mod loss;
mod optimizer;
mod run;
mod source;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_full, load_checkpoint_with, save_checkpoint, OptimizerState,
};
pub use curve::{
    convergence_step, Convergence, LossCurve, DEFAULT_CONVERGENCE_REL_EPS,
    DEFAULT_CONVERGENCE_WINDOW,
};
pub use loss::{LossSpec, LossTerm, WeightedTerm, DEFAULT_HUBER_DELTA, DEFAULT_SMOOTH_L1_BETA};
pub use optimizer::{Rmsprop, RmspropConfig};
pub use run::{assemble_batch, epoch_order, train, train_resumed, EpochHook, TrainConfig, TrainOutput};
pub use source::{BatchSource, InMemorySource, ManifestSource};

use serde::{Deserialize, Serialize};

/// Which target the loss compares predictions against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Noisy input, independently-noisy target.
    N2n,
    /// Noisy input, clean target.
    N2c,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::N2n => f.write_str("n2n"),
            Scheme::N2c => f.write_str("n2c"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "n2n" => Ok(Scheme::N2n),
            "n2c" => Ok(Scheme::N2c),
            other => Err(crate::error::Error::validation(format!(
                "unknown scheme `{other}` (expected n2n or n2c)"
            ))),
        }
    }
}

impl Scheme {
    /// Table label: N2N / N2C, with an SMN suffix added by callers when the
    /// run used standardized inputs.
    pub fn table_label(&self) -> &'static str {
        match self {
            Scheme::N2n => "N2N",
            Scheme::N2c => "N2C",
        }
    }
}
