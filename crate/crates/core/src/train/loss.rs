//! Loss functions: L1, MSE, Huber and smooth-L1, alone or in weighted sums.
//!
//! Values and gradients are computed elementwise in f64 and mean-reduced
//! over every element of the batch. Huber and smooth-L1 coincide at
//! δ = β = 1 but are kept as distinct named terms with independent
//! parameters.

use ndarray::Array4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossTerm {
    L1,
    Mse,
    Huber { delta: f64 },
    SmoothL1 { beta: f64 },
}

impl LossTerm {
    /// Per-element value and derivative at difference `d = pred - target`.
    fn eval(&self, d: f64) -> (f64, f64) {
        match *self {
            LossTerm::L1 => (d.abs(), signum0(d)),
            LossTerm::Mse => (d * d, 2.0 * d),
            LossTerm::Huber { delta } => {
                if d.abs() <= delta {
                    (0.5 * d * d, d)
                } else {
                    (delta * (d.abs() - 0.5 * delta), delta * signum0(d))
                }
            }
            LossTerm::SmoothL1 { beta } => {
                if d.abs() <= beta {
                    (0.5 * d * d / beta, d / beta)
                } else {
                    (d.abs() - 0.5 * beta, signum0(d))
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            LossTerm::L1 => "l1",
            LossTerm::Mse => "mse",
            LossTerm::Huber { .. } => "huber",
            LossTerm::SmoothL1 { .. } => "smooth_l1",
        }
    }
}

/// Subgradient convention: sign(0) = 0.
fn signum0(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    #[serde(flatten)]
    pub term: LossTerm,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

/// A non-empty weighted sum of loss terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossSpec {
    pub terms: Vec<WeightedTerm>,
}

pub const DEFAULT_HUBER_DELTA: f64 = 1.0;
pub const DEFAULT_SMOOTH_L1_BETA: f64 = 1.0;

impl LossSpec {
    pub fn single(term: LossTerm) -> LossSpec {
        LossSpec {
            terms: vec![WeightedTerm { term, weight: 1.0 }],
        }
    }

    pub fn l1() -> LossSpec {
        LossSpec::single(LossTerm::L1)
    }

    pub fn mse() -> LossSpec {
        LossSpec::single(LossTerm::Mse)
    }

    /// Unit-weight sum of all four terms.
    pub fn all_sum() -> LossSpec {
        "l1+huber+smooth_l1+mse".parse().expect("static spec parses")
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::validation("loss spec must contain at least one term"));
        }
        for t in &self.terms {
            if !t.weight.is_finite() {
                return Err(Error::validation("loss weights must be finite"));
            }
            match t.term {
                LossTerm::Huber { delta } if delta <= 0.0 => {
                    return Err(Error::validation("huber delta must be positive"))
                }
                LossTerm::SmoothL1 { beta } if beta <= 0.0 => {
                    return Err(Error::validation("smooth_l1 beta must be positive"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Mean-reduced loss and gradient on f64 slices; the reference path for
    /// finite-difference checks.
    pub fn eval_f64(&self, pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        debug_assert_eq!(pred.len(), target.len());
        let n = pred.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; pred.len()];
        for (i, (&p, &t)) in pred.iter().zip(target.iter()).enumerate() {
            let d = p - t;
            let mut v_acc = 0.0;
            let mut g_acc = 0.0;
            for wt in &self.terms {
                let (v, g) = wt.term.eval(d);
                v_acc += wt.weight * v;
                g_acc += wt.weight * g;
            }
            loss += v_acc;
            grad[i] = g_acc / n;
        }
        (loss / n, grad)
    }

    /// Mean-reduced loss and gradient on an NCHW batch; accumulation in
    /// f64, gradient emitted in f32 for the backward pass.
    pub fn eval_batch(&self, pred: &Array4<f32>, target: &Array4<f32>) -> (f64, Array4<f32>) {
        debug_assert_eq!(pred.dim(), target.dim());
        let n = pred.len() as f64;
        let mut loss = 0.0f64;
        let mut grad = Array4::<f32>::zeros(pred.raw_dim());
        ndarray::Zip::from(&mut grad)
            .and(pred)
            .and(target)
            .for_each(|g, &p, &t| {
                let d = p as f64 - t as f64;
                let mut v_acc = 0.0;
                let mut g_acc = 0.0;
                for wt in &self.terms {
                    let (v, gg) = wt.term.eval(d);
                    v_acc += wt.weight * v;
                    g_acc += wt.weight * gg;
                }
                loss += v_acc;
                *g = (g_acc / n) as f32;
            });
        (loss / n, grad)
    }
}

impl std::fmt::Display for LossSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(t.term.name())?;
            match t.term {
                LossTerm::Huber { delta } if delta != DEFAULT_HUBER_DELTA => {
                    write!(f, "({delta})")?
                }
                LossTerm::SmoothL1 { beta } if beta != DEFAULT_SMOOTH_L1_BETA => {
                    write!(f, "({beta})")?
                }
                _ => {}
            }
            if t.weight != 1.0 {
                write!(f, "*{}", t.weight)?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for LossSpec {
    type Err = Error;

    /// Parse specs like `l1`, `mse`, `huber(0.004)`, `l1+mse`, `all_sum`.
    fn from_str(s: &str) -> Result<LossSpec> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all_sum") {
            return Ok(LossSpec {
                terms: vec![
                    WeightedTerm { term: LossTerm::L1, weight: 1.0 },
                    WeightedTerm {
                        term: LossTerm::Huber { delta: DEFAULT_HUBER_DELTA },
                        weight: 1.0,
                    },
                    WeightedTerm {
                        term: LossTerm::SmoothL1 { beta: DEFAULT_SMOOTH_L1_BETA },
                        weight: 1.0,
                    },
                    WeightedTerm { term: LossTerm::Mse, weight: 1.0 },
                ],
            });
        }
        let mut terms = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let (name, arg) = match part.find('(') {
                Some(open) => {
                    let close = part
                        .rfind(')')
                        .ok_or_else(|| Error::validation(format!("unclosed `(` in `{part}`")))?;
                    let arg: f64 = part[open + 1..close].trim().parse().map_err(|_| {
                        Error::validation(format!("bad numeric argument in `{part}`"))
                    })?;
                    (&part[..open], Some(arg))
                }
                None => (part, None),
            };
            let term = match (name.to_ascii_lowercase().as_str(), arg) {
                ("l1", None) => LossTerm::L1,
                ("mse" | "l2", None) => LossTerm::Mse,
                ("huber", arg) => LossTerm::Huber {
                    delta: arg.unwrap_or(DEFAULT_HUBER_DELTA),
                },
                ("smooth_l1", arg) => LossTerm::SmoothL1 {
                    beta: arg.unwrap_or(DEFAULT_SMOOTH_L1_BETA),
                },
                _ => {
                    return Err(Error::validation(format!(
                        "unknown loss term `{part}` (expected l1, mse, huber, smooth_l1, all_sum)"
                    )))
                }
            };
            terms.push(WeightedTerm { term, weight: 1.0 });
        }
        let spec = LossSpec { terms };
        spec.validate()?;
        Ok(spec)
    }
}
