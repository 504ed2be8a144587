//! Experiment configuration (TOML).
//!
//! One file describes the whole experiment: dataset synthesis, model,
//! training and evaluation, plus an optional matrix section that expands
//! the train section over scheme, loss and normalization lists. Every run
//! directory receives a snapshot of its fully resolved configuration, so no
//! run depends on tool-version defaults.

use std::path::{Path, PathBuf};

use annoclean_core::datagen::{NormalizationMode, SplitFractions};
use annoclean_core::metrics::DEFAULT_TAU;
use annoclean_core::model::ModelSpec;
use annoclean_core::train::{LossSpec, RmspropConfig, Scheme, TrainConfig};
use annoclean_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSpec,
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub eval: EvalSection,
    pub matrix: Option<MatrixSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Directory of clean PNGs; alternative to procedural generation.
    pub clean_dir: Option<PathBuf>,
    /// "dir" (requires `clean_dir`) or "procedural".
    pub clean_source: CleanSource,
    /// Procedural generation parameters.
    pub n_clean: usize,
    pub clean_height: usize,
    pub clean_width: usize,
    pub kind: annoclean_core::AnnotationKind,
    pub n_pairs: usize,
    /// Master seed; overridden by --seed and ANNOCLEAN_SEED.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Optional stamp library root; the built-in glyphs otherwise.
    pub stamp_dir: Option<PathBuf>,
    pub split: SplitSection,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            clean_dir: None,
            clean_source: CleanSource::Procedural,
            n_clean: 16,
            clean_height: 128,
            clean_width: 128,
            kind: annoclean_core::AnnotationKind::BodyMarker,
            n_pairs: 64,
            seed: 0,
            out_dir: PathBuf::from("dataset"),
            stamp_dir: None,
            split: SplitSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanSource {
    Dir,
    Procedural,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl From<SplitSection> for SplitFractions {
    fn from(s: SplitSection) -> SplitFractions {
        SplitFractions {
            train: s.train,
            val: s.val,
            test: s.test,
        }
    }
}

/// Training section. Batch size and epoch count are mandatory: the source
/// experiments do not publish values, so silent defaults would be
/// misleading at full scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_loss")]
    pub loss: String,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default)]
    pub seed: u64,
}

fn default_scheme() -> String {
    "n2n".into()
}
fn default_loss() -> String {
    "l1".into()
}
fn default_lr() -> f64 {
    1e-5
}
fn default_momentum() -> f64 {
    0.9
}
fn default_weight_decay() -> f64 {
    1e-8
}
fn default_alpha() -> f64 {
    0.99
}
fn default_eps() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub tau: f32,
    pub split: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            tau: DEFAULT_TAU,
            split: "test".into(),
        }
    }
}

/// Lists to expand the train section over; empty lists inherit the train
/// section's single value.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixSection {
    pub scheme: Vec<String>,
    pub loss: Vec<String>,
    pub normalization: Vec<String>,
}

/// One expanded training run.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub run_id: String,
    pub scheme: Scheme,
    pub loss: LossSpec,
    pub normalization: NormalizationMode,
    pub config: TrainConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::runtime(format!("config serialization failed: {e}")))
    }

    fn train_section(&self) -> Result<&TrainSection> {
        self.train
            .as_ref()
            .ok_or_else(|| Error::config("config has no [train] section"))
    }

    /// Expand the matrix (or the lone train section) into run plans with
    /// unique run ids.
    pub fn run_plans(&self) -> Result<Vec<RunPlan>> {
        let base = self.train_section()?;
        let matrix = self.matrix.clone().unwrap_or_default();
        let schemes = if matrix.scheme.is_empty() {
            vec![base.scheme.clone()]
        } else {
            matrix.scheme
        };
        let losses = if matrix.loss.is_empty() {
            vec![base.loss.clone()]
        } else {
            matrix.loss
        };
        let norms = if matrix.normalization.is_empty() {
            vec![base.normalization.to_string()]
        } else {
            matrix.normalization
        };

        let mut plans = Vec::new();
        for scheme_str in &schemes {
            for loss_str in &losses {
                for norm_str in &norms {
                    let scheme: Scheme = scheme_str.parse()?;
                    let loss: LossSpec = loss_str.parse()?;
                    let normalization = parse_normalization(norm_str)?;
                    let run_id = sanitize_run_id(&format!(
                        "{scheme}_{loss}_{normalization}"
                    ));
                    plans.push(RunPlan {
                        run_id,
                        scheme,
                        loss: loss.clone(),
                        normalization,
                        config: TrainConfig {
                            scheme,
                            loss,
                            optimizer: RmspropConfig {
                                learning_rate: base.learning_rate,
                                alpha: base.alpha,
                                eps: base.eps,
                                momentum: base.momentum,
                                weight_decay: base.weight_decay,
                            },
                            batch_size: base.batch_size,
                            epochs: base.epochs,
                            max_steps: base.max_steps,
                            normalization,
                            seed: base.seed,
                        },
                    });
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &plans {
            if !seen.insert(p.run_id.clone()) {
                return Err(Error::validation(format!(
                    "matrix expansion produced duplicate run id `{}`",
                    p.run_id
                )));
            }
        }
        Ok(plans)
    }
}

pub fn parse_normalization(s: &str) -> Result<NormalizationMode> {
    match s.to_ascii_lowercase().as_str() {
        "linear" => Ok(NormalizationMode::Linear),
        "smn" => Ok(NormalizationMode::Smn),
        other => Err(Error::validation(format!(
            "unknown normalization `{other}` (expected linear or smn)"
        ))),
    }
}

/// Filesystem-safe run id derived from scheme/loss/normalization.
fn sanitize_run_id(raw: &str) -> String {
    raw.chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '_' | '-' | '+' => c,
            '.' => 'p',
            _ => '_',
        })
        .collect()
}

/// Method label used in report tables.
pub fn display_method(arch: &str) -> String {
    match arch {
        "custom_unet" => "Costumed U-Net".to_string(),
        "global_bias" => "Global Bias".to_string(),
        other => other.to_string(),
    }
}

/// Training-mode label: scheme plus an SMN tag for standardized inputs.
pub fn display_mode(scheme: &str, normalization: &str) -> String {
    let base = match scheme {
        "n2n" => "N2N",
        "n2c" => "N2C",
        other => other,
    };
    if normalization == "smn" {
        format!("{base} SMN")
    } else {
        base.to_string()
    }
}
