//! The customized shape-preserving U-Net.
//!
//! Layout for depth D with base channels B and multiplier m, writing
//! C(s) = B·m^min(s, D-1) for the channel width at scale s:
//!
//! * encoder level s = 0..D: two 3×3 stride-1 pad-1 convolutions at C(s),
//!   the level output saved as a skip;
//! * downsampling between scales: one 3×3 stride-2 pad-1 convolution that
//!   also grows the channels;
//! * a bottleneck of two convolutions at C(D) after the last downsample;
//! * decoder level s = D-1..0: a 2×2 stride-2 transposed convolution down
//!   to C(s), concatenation with the level-s skip, then two convolutions
//!   back to C(s);
//! * a linear 1×1 output head.
//!
//! Every activation is a leaky ReLU. All strides and paddings are chosen so
//! the output matches the input size exactly whenever H and W divide 2^D.

use ndarray::{Array3, Array4, ArrayD, Axis, IxDyn};
use rayon::prelude::*;

use super::nn;
use super::{GradSet, ModelSpec, Network, ParamSet, TrainedModel};
use crate::error::{Error, Result};
use crate::rng::{normal_f64, seeded};

#[derive(Debug, Clone, Copy)]
enum Op {
    Conv {
        w: usize,
        b: usize,
        k: usize,
        stride: usize,
        act: bool,
    },
    ConvT {
        w: usize,
        b: usize,
        act: bool,
    },
    /// Concatenate the saved output of node `skip` onto the current value.
    Concat { skip: usize },
}

/// One computation node; `input` is the producing node id (0 = network
/// input, i = output of node i).
#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    input: usize,
    out_channels: usize,
}

#[derive(Clone)]
pub struct CustomUnet {
    spec: ModelSpec,
    params: ParamSet,
    nodes: Vec<Node>,
}

pub const ARCH_NAME: &str = "custom_unet";

struct PlanBuilder {
    params: ParamSet,
    nodes: Vec<Node>,
    rng: rand_chacha::ChaCha8Rng,
}

impl PlanBuilder {
    fn init_weights(&mut self, shape: &[usize], fan_in: usize) -> ArrayD<f32> {
        let std = (2.0 / fan_in as f64).sqrt();
        ArrayD::from_shape_simple_fn(IxDyn(shape), || (normal_f64(&mut self.rng) * std) as f32)
    }

    /// Current node id (output of the last pushed node).
    fn head(&self) -> usize {
        self.nodes.len()
    }

    fn conv(&mut self, name: &str, cin: usize, cout: usize, k: usize, stride: usize, act: bool) {
        let w = self.init_weights(&[cout, cin, k, k], cin * k * k);
        let widx = self.params.push(format!("{name}.weight"), w);
        let bidx = self
            .params
            .push(format!("{name}.bias"), ArrayD::zeros(IxDyn(&[cout])));
        let input = self.head();
        self.nodes.push(Node {
            op: Op::Conv {
                w: widx,
                b: bidx,
                k,
                stride,
                act,
            },
            input,
            out_channels: cout,
        });
    }

    fn convt(&mut self, name: &str, cin: usize, cout: usize) {
        let w = self.init_weights(&[cin, cout, 2, 2], cin);
        let widx = self.params.push(format!("{name}.weight"), w);
        let bidx = self
            .params
            .push(format!("{name}.bias"), ArrayD::zeros(IxDyn(&[cout])));
        let input = self.head();
        self.nodes.push(Node {
            op: Op::ConvT {
                w: widx,
                b: bidx,
                act: true,
            },
            input,
            out_channels: cout,
        });
    }

    fn concat(&mut self, skip: usize, skip_channels: usize, main_channels: usize) {
        let input = self.head();
        self.nodes.push(Node {
            op: Op::Concat { skip },
            input,
            out_channels: main_channels + skip_channels,
        });
    }
}

impl CustomUnet {
    pub fn build(spec: &ModelSpec, init_seed: u64) -> Result<CustomUnet> {
        spec.validate()?;
        let mut b = PlanBuilder {
            params: ParamSet::new(),
            nodes: Vec::new(),
            rng: seeded(init_seed),
        };
        let depth = spec.depth;

        // Encoder with skips.
        let mut skips: Vec<(usize, usize)> = Vec::new(); // (node id, channels)
        let mut cur = spec.in_channels;
        for s in 0..depth {
            let c = spec.channels_at(s);
            if s > 0 {
                b.conv(&format!("down{s}.conv"), cur, c, 3, 2, true);
            }
            let cin0 = if s == 0 { cur } else { c };
            b.conv(&format!("enc{s}.conv0"), cin0, c, 3, 1, true);
            b.conv(&format!("enc{s}.conv1"), c, c, 3, 1, true);
            skips.push((b.head(), c));
            cur = c;
        }

        // Bottleneck below the deepest skip.
        let cm = spec.channels_at(depth);
        b.conv(&format!("down{depth}.conv"), cur, cm, 3, 2, true);
        b.conv("mid.conv0", cm, cm, 3, 1, true);
        b.conv("mid.conv1", cm, cm, 3, 1, true);
        cur = cm;

        // Decoder.
        for s in (0..depth).rev() {
            let c = spec.channels_at(s);
            let (skip_node, skip_c) = skips[s];
            b.convt(&format!("up{s}.tconv"), cur, c);
            b.concat(skip_node, skip_c, c);
            // Skip widths are a build-time invariant of the plan.
            assert_eq!(
                skip_c, c,
                "encoder level {s} width {skip_c} must match decoder width {c}"
            );
            b.conv(&format!("dec{s}.conv0"), c + skip_c, c, 3, 1, true);
            b.conv(&format!("dec{s}.conv1"), c, c, 3, 1, true);
            cur = c;
        }

        b.conv("final.conv", cur, spec.out_channels, 1, 1, false);

        Ok(CustomUnet {
            spec: spec.clone(),
            params: b.params,
            nodes: b.nodes,
        })
    }

    /// Parameter element count implied by a spec, without building weights.
    pub fn parameter_count(spec: &ModelSpec) -> Result<usize> {
        let net = CustomUnet::build(spec, 0)?;
        Ok(net.params.total_elements())
    }

    /// Run one (C, H, W) sample, returning every node output; the last
    /// entry is the network output.
    fn run_forward(&self, x: &Array3<f32>) -> Vec<Array3<f32>> {
        let slope = self.spec.leaky_slope;
        let mut values: Vec<Array3<f32>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let input = if node.input == 0 {
                x
            } else {
                &values[node.input - 1]
            };
            let out = match node.op {
                Op::Conv {
                    w, b, k, stride, act,
                } => {
                    let wv = self.params.value(w);
                    let bv = self.params.value(b);
                    let mut y = nn::conv2d_forward(
                        &input.view(),
                        &wv.view().into_dimensionality().expect("conv weight is 4-d"),
                        &bv.view().into_dimensionality().expect("bias is 1-d"),
                        stride,
                        usize::from(k == 3),
                    );
                    if act {
                        nn::leaky_relu_inplace(&mut y, slope);
                    }
                    y
                }
                Op::ConvT { w, b, act } => {
                    let wv = self.params.value(w);
                    let bv = self.params.value(b);
                    let mut y = nn::convt2x2_forward(
                        &input.view(),
                        &wv.view().into_dimensionality().expect("tconv weight is 4-d"),
                        &bv.view().into_dimensionality().expect("bias is 1-d"),
                    );
                    if act {
                        nn::leaky_relu_inplace(&mut y, slope);
                    }
                    y
                }
                Op::Concat { skip } => {
                    let skip_val = &values[skip - 1];
                    nn::concat_channels(&input.view(), &skip_val.view())
                }
            };
            values.push(out);
        }
        values
    }

    /// Backward pass for one sample given its forward tape.
    fn run_backward(
        &self,
        x: &Array3<f32>,
        values: &[Array3<f32>],
        dy: Array3<f32>,
        grads: &mut ParamSet,
    ) {
        let slope = self.spec.leaky_slope;
        let mut node_grads: Vec<Option<Array3<f32>>> = vec![None; self.nodes.len()];
        *node_grads.last_mut().expect("plan is non-empty") = Some(dy);

        for (idx, node) in self.nodes.iter().enumerate().rev() {
            let Some(mut grad) = node_grads[idx].take() else {
                continue;
            };
            let input_val = if node.input == 0 {
                x
            } else {
                &values[node.input - 1]
            };
            let send = |target: usize, g: Array3<f32>, node_grads: &mut Vec<Option<Array3<f32>>>| {
                if target == 0 {
                    return; // gradient w.r.t. the network input is unused
                }
                match &mut node_grads[target - 1] {
                    Some(existing) => existing.zip_mut_with(&g, |a, b| *a += b),
                    slot @ None => *slot = Some(g),
                }
            };
            match node.op {
                Op::Conv {
                    w, b, k, stride, act,
                } => {
                    if act {
                        nn::leaky_relu_backward(&values[idx].view(), &mut grad, slope);
                    }
                    let wv = self.params.value(w);
                    let (dx, dw, db) = nn::conv2d_backward(
                        &input_val.view(),
                        &wv.view().into_dimensionality().expect("conv weight is 4-d"),
                        &grad.view(),
                        stride,
                        usize::from(k == 3),
                    );
                    grads.value_mut(w)
                        .zip_mut_with(&dw.into_dyn(), |a, b| *a += b);
                    grads.value_mut(b)
                        .zip_mut_with(&db.into_dyn(), |a, b| *a += b);
                    send(node.input, dx, &mut node_grads);
                }
                Op::ConvT { w, b, act } => {
                    if act {
                        nn::leaky_relu_backward(&values[idx].view(), &mut grad, slope);
                    }
                    let wv = self.params.value(w);
                    let (dx, dw, db) = nn::convt2x2_backward(
                        &input_val.view(),
                        &wv.view().into_dimensionality().expect("tconv weight is 4-d"),
                        &grad.view(),
                    );
                    grads.value_mut(w)
                        .zip_mut_with(&dw.into_dyn(), |a, b| *a += b);
                    grads.value_mut(b)
                        .zip_mut_with(&db.into_dyn(), |a, b| *a += b);
                    send(node.input, dx, &mut node_grads);
                }
                Op::Concat { skip } => {
                    debug_assert_eq!(
                        node.out_channels,
                        input_val.dim().0 + values[skip - 1].dim().0
                    );
                    let main_c = input_val.dim().0;
                    let d_main = grad.slice(ndarray::s![..main_c, .., ..]).to_owned();
                    let d_skip = grad.slice(ndarray::s![main_c.., .., ..]).to_owned();
                    send(node.input, d_main, &mut node_grads);
                    send(skip, d_skip, &mut node_grads);
                }
            }
        }
    }

    fn check_dims(&self, batch: &Array4<f32>) -> Result<()> {
        let (_, c, h, w) = batch.dim();
        if c != self.spec.in_channels {
            return Err(Error::validation(format!(
                "expected {} input channels, got {c}",
                self.spec.in_channels
            )));
        }
        let div = 1usize << self.spec.depth;
        if h % div != 0 || w % div != 0 || h == 0 || w == 0 {
            return Err(Error::validation(format!(
                "dims must be divisible by {div}, got {h}x{w}"
            )));
        }
        Ok(())
    }
}

impl Network for CustomUnet {
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
        1 << self.spec.depth
    }

    fn forward(&self, batch: &Array4<f32>) -> Result<Array4<f32>> {
        self.check_dims(batch)?;
        let n = batch.dim().0;
        let outputs: Vec<Array3<f32>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let sample = batch.index_axis(Axis(0), i).to_owned();
                let values = self.run_forward(&sample);
                values.into_iter().last().expect("plan is non-empty")
            })
            .collect();
        stack_batch(&outputs)
    }

    fn forward_backward(
        &self,
        batch: &Array4<f32>,
        loss_grad: &mut dyn FnMut(&Array4<f32>) -> (f64, Array4<f32>),
    ) -> Result<(f64, GradSet)> {
        self.check_dims(batch)?;
        let n = batch.dim().0;
        let samples: Vec<Array3<f32>> = (0..n)
            .map(|i| batch.index_axis(Axis(0), i).to_owned())
            .collect();
        let tapes: Vec<Vec<Array3<f32>>> = samples
            .par_iter()
            .map(|x| self.run_forward(x))
            .collect();
        let outputs: Vec<Array3<f32>> = tapes
            .iter()
            .map(|t| t.last().expect("plan is non-empty").clone())
            .collect();
        let out_batch = stack_batch(&outputs)?;

        let (loss, dy_batch) = loss_grad(&out_batch);

        let per_sample: Vec<ParamSet> = samples
            .par_iter()
            .zip(tapes.par_iter())
            .enumerate()
            .map(|(i, (x, tape))| {
                let mut grads = self.params.zeros_like();
                let dy = dy_batch.index_axis(Axis(0), i).to_owned();
                self.run_backward(x, tape, dy, &mut grads);
                grads
            })
            .collect();

        let mut total = self.params.zeros_like();
        for g in &per_sample {
            total.add_assign(g);
        }
        Ok((loss, total))
    }

    fn clone_box(&self) -> Box<dyn Network> {
        Box::new(self.clone())
    }
}

fn stack_batch(samples: &[Array3<f32>]) -> Result<Array4<f32>> {
    let views: Vec<_> = samples.iter().map(|s| s.view()).collect();
    ndarray::stack(Axis(0), &views)
        .map_err(|e| Error::runtime(format!("batch assembly failed: {e}")))
}

/// Registry builder for the customized U-Net.
pub fn build(spec: &ModelSpec, init_seed: u64) -> Result<TrainedModel> {
    Ok(TrainedModel::new(Box::new(CustomUnet::build(
        spec, init_seed,
    )?)))
}
