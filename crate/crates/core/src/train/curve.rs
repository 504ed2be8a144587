//! Loss curves and convergence detection.

use std::path::Path;

use crate::error::{Error, Result};

/// Per-step training loss, sampled at every optimizer update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossCurve {
    /// (global step, loss) with strictly increasing steps.
    pub entries: Vec<(u64, f64)>,
    pub wall_clock_secs: f64,
}

impl LossCurve {
    pub fn push(&mut self, step: u64, loss: f64) {
        if let Some(&(last, _)) = self.entries.last() {
            debug_assert!(step > last, "steps must be strictly increasing");
        }
        self.entries.push((step, loss));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write as `step,loss` CSV.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.entries.len() * 16 + 16);
        out.push_str("step,loss\n");
        for (step, loss) in &self.entries {
            out.push_str(&format!("{step},{loss}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<LossCurve> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                if line.trim() != "step,loss" {
                    return Err(Error::validation(format!(
                        "{}: expected header `step,loss`, got `{line}`",
                        path.display()
                    )));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (s, l) = line.split_once(',').ok_or_else(|| {
                Error::validation(format!("{}:{}: malformed row", path.display(), lineno + 1))
            })?;
            let step: u64 = s.trim().parse().map_err(|_| {
                Error::validation(format!("{}:{}: bad step", path.display(), lineno + 1))
            })?;
            let loss: f64 = l.trim().parse().map_err(|_| {
                Error::validation(format!("{}:{}: bad loss", path.display(), lineno + 1))
            })?;
            entries.push((step, loss));
        }
        Ok(LossCurve {
            entries,
            wall_clock_secs: 0.0,
        })
    }
}

/// Result of [`convergence_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Global step at which the curve first settles.
    pub step: u64,
    /// Set when only the final window itself qualified, e.g. on a curve
    /// that never settles; such values should be read as "did not converge
    /// before the end".
    pub degenerate: bool,
}

pub const DEFAULT_CONVERGENCE_WINDOW: usize = 50;
pub const DEFAULT_CONVERGENCE_REL_EPS: f64 = 0.05;

/// First step whose forward-looking moving average over `window` entries is
/// within `rel_eps` (relative) of the final window's moving average.
pub fn convergence_step(curve: &LossCurve, window: usize, rel_eps: f64) -> Result<Convergence> {
    if window == 0 {
        return Err(Error::validation("window must be at least 1"));
    }
    let n = curve.entries.len();
    if n <= window {
        return Err(Error::validation(format!(
            "curve has {n} entries; need more than the window ({window})"
        )));
    }
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(curve.entries.iter().scan(0.0, |acc, &(_, l)| {
            *acc += l;
            Some(*acc)
        }))
        .collect();
    let ma = |i: usize| (prefix[i + window] - prefix[i]) / window as f64;
    let last_start = n - window;
    let final_ma = ma(last_start);
    let tol = rel_eps * final_ma.abs().max(1e-12);
    for i in 0..=last_start {
        if (ma(i) - final_ma).abs() <= tol {
            return Ok(Convergence {
                step: curve.entries[i].0,
                degenerate: i == last_start,
            });
        }
    }
    unreachable!("the final window always matches itself");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_of(values: &[f64]) -> LossCurve {
        LossCurve {
            entries: values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as u64, v))
                .collect(),
            wall_clock_secs: 0.0,
        }
    }

    #[test]
    fn constant_curve_converges_at_step_zero() {
        let c = curve_of(&[0.3; 120]);
        let conv = convergence_step(&c, 50, 0.05).unwrap();
        assert_eq!(conv.step, 0);
        assert!(!conv.degenerate);
    }

    #[test]
    fn step_drop_converges_once_window_is_past_the_drop() {
        // 1.0 for 100 steps then 0.1: the first window whose average is
        // within 5% of 0.1 is the first all-post-drop window.
        let mut vals = vec![1.0; 100];
        vals.extend(vec![0.1; 200]);
        let c = curve_of(&vals);
        let conv = convergence_step(&c, 50, 0.05).unwrap();
        // Independent check against the moving-average definition.
        let expected = (0..=vals.len() - 50)
            .find(|&i| {
                let ma: f64 = vals[i..i + 50].iter().sum::<f64>() / 50.0;
                (ma - 0.1).abs() <= 0.05 * 0.1
            })
            .unwrap() as u64;
        assert_eq!(conv.step, expected);
        assert_eq!(conv.step, 100);
        assert!(!conv.degenerate);
    }

    #[test]
    fn increasing_curve_is_degenerate_at_final_window() {
        // Growth per step exceeds the 5% band, so strictly only the final
        // window matches itself; the result is flagged degenerate.
        let vals: Vec<f64> = (0..200).map(|i| 1.06f64.powi(i)).collect();
        let c = curve_of(&vals);
        let conv = convergence_step(&c, 50, 0.05).unwrap();
        assert_eq!(conv.step, 150);
        assert!(conv.degenerate);

        // A slowly increasing curve settles earlier under the literal
        // definition and is not degenerate.
        let slow: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let conv = convergence_step(&curve_of(&slow), 50, 0.05).unwrap();
        assert!(conv.step < 150);
        assert!(!conv.degenerate);
    }

    #[test]
    fn short_curve_is_rejected() {
        let c = curve_of(&[1.0; 50]);
        assert!(convergence_step(&c, 50, 0.05).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loss.csv");
        let mut c = LossCurve::default();
        c.push(0, 0.5);
        c.push(1, 0.25);
        c.push(2, 0.125);
        c.save_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,loss\n0,0.5\n"));
        let back = LossCurve::load_csv(&path).unwrap();
        assert_eq!(back.entries, c.entries);
    }
}
