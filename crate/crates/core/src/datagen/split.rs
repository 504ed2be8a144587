//! Grouped train/val/test splits.
//!
//! All records derived from the same clean image go to the same split;
//! anything else would leak near-duplicates of test content into training.

use std::collections::BTreeMap;

use super::DatasetManifest;
use crate::error::{Error, Result};
use crate::rng::{self, seeded};

/// Split fractions; must sum to 1 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    fn validate(&self) -> Result<()> {
        for (name, f) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::validation(format!(
                    "split fraction {name}={f} outside [0, 1]"
                )));
            }
        }
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Assign clean-image groups to splits and record the result in the
/// manifest. Group counts follow the largest-remainder rule, group order is
/// a seeded shuffle, and record ids within each split keep dataset order.
pub fn split(
    manifest: &mut DatasetManifest,
    fractions: SplitFractions,
    seed: u64,
) -> Result<()> {
    fractions.validate()?;
    let mut groups: Vec<String> = manifest
        .clean_groups()
        .into_iter()
        .map(str::to_string)
        .collect();
    rng::shuffle(&mut seeded(seed), &mut groups);

    let counts = largest_remainder(
        groups.len(),
        &[fractions.train, fractions.val, fractions.test],
    );
    let names = ["train", "val", "test"];

    let mut group_to_split: BTreeMap<&str, &str> = BTreeMap::new();
    let mut offset = 0;
    for (name, count) in names.iter().zip(counts.iter()) {
        for g in &groups[offset..offset + count] {
            group_to_split.insert(g.as_str(), name);
        }
        offset += count;
    }

    let mut splits: BTreeMap<String, Vec<String>> =
        names.iter().map(|n| (n.to_string(), Vec::new())).collect();
    for r in &manifest.records {
        let split_name = group_to_split
            .get(r.clean_group.as_str())
            .expect("every group was assigned");
        splits
            .get_mut(*split_name)
            .expect("split exists")
            .push(r.record_id.clone());
    }

    manifest.splits = splits;
    manifest.split_fractions = Some(
        names
            .iter()
            .zip([fractions.train, fractions.val, fractions.test])
            .map(|(n, f)| (n.to_string(), f))
            .collect(),
    );
    manifest.split_seed = Some(seed);
    Ok(())
}

/// Integer allocation of `total` into parts proportional to `fractions`.
fn largest_remainder(total: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    // Hand out the remainder by descending fractional part; ties go to the
    // earlier split so the result is order-stable.
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut i = 0;
    while assigned < total {
        counts[order[i % order.len()]] += 1;
        assigned += 1;
        i += 1;
    }
    counts
}
