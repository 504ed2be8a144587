//! Named parameter containers.

use ndarray::ArrayD;

use crate::error::{Error, Result};

/// One named weight array.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub value: ArrayD<f32>,
}

/// An ordered set of named parameter arrays. Order is the build order of
/// the architecture and is part of the checkpoint contract.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    entries: Vec<ParamEntry>,
}

/// Gradients mirror the parameter layout exactly.
pub type GradSet = ParamSet;

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: ArrayD<f32>) -> usize {
        self.entries.push(ParamEntry {
            name: name.into(),
            value,
        });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, idx: usize) -> &ParamEntry {
        &self.entries[idx]
    }

    pub fn value(&self, idx: usize) -> &ArrayD<f32> {
        &self.entries[idx].value
    }

    pub fn value_mut(&mut self, idx: usize) -> &mut ArrayD<f32> {
        &mut self.entries[idx].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamEntry> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamEntry> {
        self.entries.iter_mut()
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// Same names and shapes, zero-valued; the starting point for gradient
    /// and optimizer-state buffers.
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|e| ParamEntry {
                    name: e.name.clone(),
                    value: ArrayD::zeros(e.value.raw_dim()),
                })
                .collect(),
        }
    }

    /// Elementwise accumulate `other` into `self`.
    pub fn add_assign(&mut self, other: &ParamSet) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.entries.iter_mut().zip(other.entries.iter()) {
            a.value.zip_mut_with(&b.value, |x, y| *x += y);
        }
    }

    /// Copy values from `other`, validating names and shapes; the named
    /// layer is reported on mismatch.
    pub fn load_from(&mut self, other: &ParamSet) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::validation(format!(
                "parameter count mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for (dst, src) in self.entries.iter_mut().zip(other.entries.iter()) {
            if dst.name != src.name {
                return Err(Error::validation(format!(
                    "parameter name mismatch: expected `{}`, found `{}`",
                    dst.name, src.name
                )));
            }
            if dst.value.shape() != src.value.shape() {
                return Err(Error::ShapeMismatch {
                    layer: dst.name.clone(),
                    found: src.value.shape().to_vec(),
                    expected: dst.value.shape().to_vec(),
                });
            }
            dst.value.assign(&src.value);
        }
        Ok(())
    }
}
