//! A one-parameter constant predictor.
//!
//! Ignores its input and outputs a single learnable value everywhere.
//! Training it reduces to a scalar point-estimation problem, which makes it
//! the reference fixture for checking that the training loop drives L2 to
//! the sample mean and L1 to the sample median.

use ndarray::{Array4, ArrayD, IxDyn};

use super::{GradSet, ModelSpec, Network, ParamSet, TrainedModel};
use crate::error::Result;

pub const ARCH_NAME: &str = "global_bias";

#[derive(Clone)]
pub struct GlobalBias {
    spec: ModelSpec,
    params: ParamSet,
}

impl GlobalBias {
    pub fn build(spec: &ModelSpec, _init_seed: u64) -> GlobalBias {
        let mut params = ParamSet::new();
        params.push("bias", ArrayD::zeros(IxDyn(&[1])));
        GlobalBias {
            spec: spec.clone(),
            params,
        }
    }

    pub fn bias(&self) -> f32 {
        self.params.value(0)[0]
    }
}

impl Network for GlobalBias {
    fn arch_name(&self) -> &str {
        ARCH_NAME
    }

    fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn dim_divisor(&self) -> usize {
        1
    }

    fn forward(&self, batch: &Array4<f32>) -> Result<Array4<f32>> {
        Ok(Array4::from_elem(batch.raw_dim(), self.bias()))
    }

    fn forward_backward(
        &self,
        batch: &Array4<f32>,
        loss_grad: &mut dyn FnMut(&Array4<f32>) -> (f64, Array4<f32>),
    ) -> Result<(f64, GradSet)> {
        let out = self.forward(batch)?;
        let (loss, dy) = loss_grad(&out);
        let mut grads = self.params.zeros_like();
        grads.value_mut(0)[0] = dy.iter().map(|&g| g as f64).sum::<f64>() as f32;
        Ok((loss, grads))
    }

    fn clone_box(&self) -> Box<dyn Network> {
        Box::new(self.clone())
    }
}

/// Registry builder for the constant predictor.
pub fn build(spec: &ModelSpec, init_seed: u64) -> Result<TrainedModel> {
    Ok(TrainedModel::new(Box::new(GlobalBias::build(
        spec, init_seed,
    ))))
}
