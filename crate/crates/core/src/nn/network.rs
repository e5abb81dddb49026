use serde::{Deserialize, Serialize};

use super::{
    batchnorm1d_backward, batchnorm1d_forward, conv1d_backward, conv1d_forward, dropout_backward, dropout_forward,
    linear_backward, linear_forward, maxpool1d_backward, maxpool1d_forward, relu_backward, relu_forward, shape_err,
    BatchNormParams, BnCache, Mode, NnError, Tensor,
};
use crate::rng::Prng;
use crate::scalar::Scalar;

pub const N_CONV_BLOCKS: usize = 4;
pub const N_FC_BLOCKS: usize = 3;
pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvBlockConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub conv_blocks: Vec<ConvBlockConfig>,
    pub fc_sizes: Vec<usize>,
    pub dropout_p: f64,
    pub pool_kernel: usize,
    pub input_len: usize,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let block = |i, o, k| ConvBlockConfig {
            in_channels: i,
            out_channels: o,
            kernel_size: k,
        };
        NetworkConfig {
            conv_blocks: vec![block(1, 8, 7), block(8, 16, 5), block(16, 32, 5), block(32, 64, 3)],
            fc_sizes: vec![128, 32, N_CLASSES],
            dropout_p: 0.5,
            pool_kernel: 2,
            input_len: 250,
            bn_eps: 1e-5,
            bn_momentum: 0.1,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        if self.conv_blocks.len() != N_CONV_BLOCKS {
            return bad(format!("need {N_CONV_BLOCKS} conv blocks, got {}", self.conv_blocks.len()));
        }
        if self.fc_sizes.len() != N_FC_BLOCKS {
            return bad(format!("need {N_FC_BLOCKS} fully connected sizes, got {}", self.fc_sizes.len()));
        }
        if self.fc_sizes[N_FC_BLOCKS - 1] != N_CLASSES {
            return bad(format!("last fully connected width must be {N_CLASSES}"));
        }
        if self.fc_sizes.contains(&0) {
            return bad("fully connected widths must be positive".into());
        }
        if self.conv_blocks[0].in_channels != 1 {
            return bad("first conv block must take 1 input channel".into());
        }
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if b.kernel_size == 0 || b.kernel_size % 2 == 0 {
                return bad(format!("conv block {i}: kernel size {} is not odd", b.kernel_size));
            }
            if b.out_channels == 0 {
                return bad(format!("conv block {i}: no output channels"));
            }
            if i > 0 && b.in_channels != self.conv_blocks[i - 1].out_channels {
                return bad(format!(
                    "conv block {i} takes {} channels but block {} produces {}",
                    b.in_channels,
                    i - 1,
                    self.conv_blocks[i - 1].out_channels
                ));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout probability {} outside [0, 1)", self.dropout_p));
        }
        if self.pool_kernel == 0 {
            return bad("pool kernel must be positive".into());
        }
        if !(self.bn_eps > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) {
            return bad("batch norm epsilon must be positive and momentum in [0, 1]".into());
        }
        if self.conv_output_len() == 0 {
            return bad(format!("input length {} vanishes after pooling", self.input_len));
        }
        Ok(())
    }

    /// Length of each channel after the last pooling layer.
    pub fn conv_output_len(&self) -> usize {
        self.conv_blocks
            .iter()
            .fold(self.input_len, |len, _| len / self.pool_kernel.max(1))
    }

    pub fn flatten_width(&self) -> usize {
        self.conv_blocks.last().map_or(0, |b| b.out_channels) * self.conv_output_len()
    }

    fn fc_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.fc_sizes.len());
        let mut prev = self.flatten_width();
        for &w in &self.fc_sizes {
            dims.push((prev, w));
            prev = w;
        }
        dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlockParams<T> {
    pub bn: BatchNormParams<T>,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams<T> {
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamPart {
    Conv,
    Fc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Trainable,
    Buffer,
}

/// One named parameter array, as enumerated by [`NetworkParams::blocks`].
#[derive(Debug)]
pub struct ParamRef<'a, T> {
    pub name: String,
    pub part: ParamPart,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub data: &'a [T],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub conv: Vec<ConvBlockParams<T>>,
    pub fc: Vec<LinearParams<T>>,
}

fn uniform_vec<T: Scalar>(n: usize, bound: f64, rng: &mut Prng) -> Vec<T> {
    (0..n).map(|_| T::of(rng.uniform_range(-bound, bound))).collect()
}

impl<T: Scalar> NetworkParams<T> {
    /// Weights and biases uniform in `±sqrt(1 / fan_in)`, BN gamma 1 and
    /// beta 0, running statistics at (0, 1).
    pub fn init(config: &NetworkConfig, rng: &mut Prng) -> Result<Self, NnError> {
        config.validate()?;
        let conv = config
            .conv_blocks
            .iter()
            .map(|b| {
                let fan_in = b.in_channels * b.kernel_size;
                let bound = (1.0 / fan_in as f64).sqrt();
                let n = b.out_channels * fan_in;
                ConvBlockParams {
                    bn: BatchNormParams::new(b.in_channels),
                    weight: Tensor::from_vec(
                        &[b.out_channels, b.in_channels, b.kernel_size],
                        uniform_vec(n, bound, rng),
                    )
                    .expect("sized"),
                    bias: uniform_vec(b.out_channels, bound, rng),
                }
            })
            .collect();
        let fc = config
            .fc_dims()
            .into_iter()
            .map(|(i, o)| {
                let bound = (1.0 / i as f64).sqrt();
                LinearParams {
                    weight: Tensor::from_vec(&[o, i], uniform_vec(o * i, bound, rng)).expect("sized"),
                    bias: uniform_vec(o, bound, rng),
                }
            })
            .collect();
        Ok(NetworkParams { conv, fc })
    }

    /// Shapes expected by `config`, in [`blocks`](Self::blocks) order.
    pub fn expected_shapes(config: &NetworkConfig) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for b in &config.conv_blocks {
            for _ in 0..4 {
                shapes.push(vec![b.in_channels]);
            }
            shapes.push(vec![b.out_channels, b.in_channels, b.kernel_size]);
            shapes.push(vec![b.out_channels]);
        }
        for (i, o) in config.fc_dims() {
            shapes.push(vec![o, i]);
            shapes.push(vec![o]);
        }
        shapes
    }

    pub fn check(&self, config: &NetworkConfig) -> Result<(), NnError> {
        config.validate()?;
        let expected = Self::expected_shapes(config);
        let blocks = self.blocks();
        if blocks.len() != expected.len() {
            return Err(shape_err(format!(
                "parameters have {} blocks, configuration needs {}",
                blocks.len(),
                expected.len()
            )));
        }
        for (b, shape) in blocks.iter().zip(&expected) {
            if &b.shape != shape || b.data.len() != shape.iter().product::<usize>() {
                return Err(shape_err(format!("{} has shape {:?}, expected {shape:?}", b.name, b.shape)));
            }
        }
        if self.conv.iter().any(|c| c.bn.running_var.iter().any(|&v| !(v > T::zero()))) {
            return Err(NnError::InvalidConfig("running variance must be strictly positive".into()));
        }
        Ok(())
    }

    /// Every parameter array in storage order: per conv block
    /// `bn.gamma, bn.beta, bn.running_mean, bn.running_var, weight, bias`,
    /// then per fully connected block `weight, bias`.
    pub fn blocks(&self) -> Vec<ParamRef<'_, T>> {
        use ParamKind::*;
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            let ch = vec![c.bn.channels()];
            for (name, kind, data) in [
                ("bn.gamma", Trainable, &c.bn.gamma),
                ("bn.beta", Trainable, &c.bn.beta),
                ("bn.running_mean", Buffer, &c.bn.running_mean),
                ("bn.running_var", Buffer, &c.bn.running_var),
            ] {
                out.push(ParamRef {
                    name: format!("conv{i}.{name}"),
                    part: ParamPart::Conv,
                    kind,
                    shape: ch.clone(),
                    data,
                });
            }
            out.push(ParamRef {
                name: format!("conv{i}.weight"),
                part: ParamPart::Conv,
                kind: Trainable,
                shape: c.weight.shape().to_vec(),
                data: c.weight.data(),
            });
            out.push(ParamRef {
                name: format!("conv{i}.bias"),
                part: ParamPart::Conv,
                kind: Trainable,
                shape: vec![c.bias.len()],
                data: &c.bias,
            });
        }
        for (i, f) in self.fc.iter().enumerate() {
            out.push(ParamRef {
                name: format!("fc{i}.weight"),
                part: ParamPart::Fc,
                kind: Trainable,
                shape: f.weight.shape().to_vec(),
                data: f.weight.data(),
            });
            out.push(ParamRef {
                name: format!("fc{i}.bias"),
                part: ParamPart::Fc,
                kind: Trainable,
                shape: vec![f.bias.len()],
                data: &f.bias,
            });
        }
        out
    }

    /// Mutable views in [`blocks`](Self::blocks) order.
    pub fn blocks_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for c in &mut self.conv {
            out.push(&mut c.bn.gamma);
            out.push(&mut c.bn.beta);
            out.push(&mut c.bn.running_mean);
            out.push(&mut c.bn.running_var);
            out.push(c.weight.data_mut());
            out.push(&mut c.bias);
        }
        for f in &mut self.fc {
            out.push(f.weight.data_mut());
            out.push(&mut f.bias);
        }
        out
    }

    /// Trainable arrays in [`Gradients::flat`] order.
    pub fn trainable_mut(&mut self) -> Vec<(ParamPart, &mut [T])> {
        let mut out: Vec<(ParamPart, &mut [T])> = Vec::new();
        for c in &mut self.conv {
            out.push((ParamPart::Conv, &mut c.bn.gamma));
            out.push((ParamPart::Conv, &mut c.bn.beta));
            out.push((ParamPart::Conv, c.weight.data_mut()));
            out.push((ParamPart::Conv, &mut c.bias));
        }
        for f in &mut self.fc {
            out.push((ParamPart::Fc, f.weight.data_mut()));
            out.push((ParamPart::Fc, &mut f.bias));
        }
        out
    }

    pub fn trainable_sizes(&self) -> Vec<usize> {
        self.blocks()
            .iter()
            .filter(|b| b.kind == ParamKind::Trainable)
            .map(|b| b.data.len())
            .collect()
    }

    pub fn n_trainable(&self) -> usize {
        self.trainable_sizes().iter().sum()
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.data.iter().all(|v| v.is_finite()))
    }

    /// Folds the batch statistics of a train-mode forward pass into the
    /// running statistics. Blocks that ran in eval mode are left alone.
    pub fn update_running_stats(&mut self, fwd: &Forward<T>, momentum: f64) {
        for (p, cache) in self.conv.iter_mut().zip(&fwd.conv) {
            p.bn.update_running(&cache.bn, momentum);
        }
    }

    pub fn cast<U: Scalar>(&self) -> NetworkParams<U> {
        let v = |x: &[T]| x.iter().map(|a| U::of(a.as_f64())).collect::<Vec<U>>();
        NetworkParams {
            conv: self
                .conv
                .iter()
                .map(|c| ConvBlockParams {
                    bn: BatchNormParams {
                        gamma: v(&c.bn.gamma),
                        beta: v(&c.bn.beta),
                        running_mean: v(&c.bn.running_mean),
                        running_var: v(&c.bn.running_var),
                    },
                    weight: c.weight.cast(),
                    bias: v(&c.bias),
                })
                .collect(),
            fc: self
                .fc
                .iter()
                .map(|f| LinearParams {
                    weight: f.weight.cast(),
                    bias: v(&f.bias),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    pub bn: BnCache<T>,
    conv_in: Tensor<T>,
    pre_relu: Tensor<T>,
    argmax: Vec<usize>,
}

/// Logits plus everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct Forward<T> {
    pub logits: Tensor<T>,
    pub conv: Vec<ConvCache<T>>,
    conv_out_shape: Vec<usize>,
    dropout_mask: Option<Vec<T>>,
    fc_inputs: Vec<Tensor<T>>,
    fc_pre: Vec<Tensor<T>>,
}

pub fn forward<T: Scalar>(
    params: &NetworkParams<T>,
    config: &NetworkConfig,
    batch: &Tensor<T>,
    mode: Mode,
    rng: &mut Prng,
) -> Result<Forward<T>, NnError> {
    forward_with(params, config, batch, mode, mode, rng)
}

/// Forward pass with separate modes for the convolutional part (batch norm)
/// and the fully connected part (dropout). Parameters are never modified.
pub fn forward_with<T: Scalar>(
    params: &NetworkParams<T>,
    config: &NetworkConfig,
    batch: &Tensor<T>,
    conv_mode: Mode,
    head_mode: Mode,
    rng: &mut Prng,
) -> Result<Forward<T>, NnError> {
    let (n, c, len) = batch.dims3()?;
    if c != 1 || len != config.input_len {
        return Err(shape_err(format!(
            "network input must be (n, 1, {}), got {:?}",
            config.input_len,
            batch.shape()
        )));
    }
    if params.conv.len() != config.conv_blocks.len() || params.fc.len() != config.fc_sizes.len() {
        return Err(shape_err("parameters do not match the network configuration"));
    }
    let mut x = batch.clone();
    let mut conv = Vec::with_capacity(params.conv.len());
    for p in &params.conv {
        let (normed, bn) = batchnorm1d_forward(&x, &p.bn, config.bn_eps, conv_mode)?;
        let pre_relu = conv1d_forward(&normed, &p.weight, &p.bias)?;
        let act = relu_forward(&pre_relu);
        let (pooled, argmax) = maxpool1d_forward(&act, config.pool_kernel)?;
        conv.push(ConvCache {
            bn,
            conv_in: normed,
            pre_relu,
            argmax,
        });
        x = pooled;
    }
    let conv_out_shape = x.shape().to_vec();
    let width = x.len() / n.max(1);
    let flat = x.reshape(&[n, width])?;
    let (mut h, dropout_mask) = dropout_forward(&flat, config.dropout_p, head_mode, rng)?;
    let mut fc_inputs = Vec::with_capacity(params.fc.len());
    let mut fc_pre = Vec::with_capacity(params.fc.len());
    let last = params.fc.len() - 1;
    for (i, p) in params.fc.iter().enumerate() {
        let z = linear_forward(&h, &p.weight, &p.bias)?;
        fc_inputs.push(h);
        h = if i < last { relu_forward(&z) } else { z.clone() };
        fc_pre.push(z);
    }
    Ok(Forward {
        logits: h,
        conv,
        conv_out_shape,
        dropout_mask,
        fc_inputs,
        fc_pre,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrads<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcGrads<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Gradients of the trainable parameters. `conv` is `None` when the
/// convolutional part was frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub conv: Option<Vec<BlockGrads<T>>>,
    pub fc: Vec<FcGrads<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// One entry per trainable array, in [`NetworkParams::trainable_mut`]
    /// order; frozen arrays are `None`.
    pub fn flat(&self, n_conv_blocks: usize) -> Vec<Option<&[T]>> {
        let mut out = Vec::new();
        match &self.conv {
            Some(blocks) => {
                for b in blocks {
                    out.extend([
                        Some(b.gamma.as_slice()),
                        Some(b.beta.as_slice()),
                        Some(b.weight.as_slice()),
                        Some(b.bias.as_slice()),
                    ]);
                }
            }
            None => out.extend(std::iter::repeat_n(None, 4 * n_conv_blocks)),
        }
        for f in &self.fc {
            out.extend([Some(f.weight.as_slice()), Some(f.bias.as_slice())]);
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.flat(0).iter().flatten().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// Backpropagates `dlogits` through a cached forward pass. With
/// `freeze_conv` the convolutional part is not visited at all.
pub fn backward<T: Scalar>(
    params: &NetworkParams<T>,
    fwd: &Forward<T>,
    dlogits: &Tensor<T>,
    freeze_conv: bool,
) -> Result<Gradients<T>, NnError> {
    if dlogits.shape() != fwd.logits.shape() {
        return Err(shape_err(format!(
            "logit gradient {:?}, logits {:?}",
            dlogits.shape(),
            fwd.logits.shape()
        )));
    }
    let last = params.fc.len() - 1;
    let mut g = dlogits.clone();
    let mut fc = Vec::with_capacity(params.fc.len());
    for i in (0..params.fc.len()).rev() {
        if i < last {
            g = relu_backward(&fwd.fc_pre[i], &g)?;
        }
        let lg = linear_backward(&fwd.fc_inputs[i], &params.fc[i].weight, &g)?;
        fc.push(FcGrads {
            weight: lg.weight.into_data(),
            bias: lg.bias,
        });
        g = lg.input;
    }
    fc.reverse();
    if freeze_conv {
        return Ok(Gradients { conv: None, fc });
    }
    let g = dropout_backward(fwd.dropout_mask.as_deref(), &g)?;
    let mut g = g.reshape(&fwd.conv_out_shape)?;
    let mut conv = Vec::with_capacity(params.conv.len());
    for i in (0..params.conv.len()).rev() {
        let cache = &fwd.conv[i];
        let p = &params.conv[i];
        let g_act = maxpool1d_backward(cache.pre_relu.shape(), &cache.argmax, &g)?;
        let g_pre = relu_backward(&cache.pre_relu, &g_act)?;
        let cg = conv1d_backward(&cache.conv_in, &p.weight, &g_pre)?;
        let (gx, gamma, beta) = batchnorm1d_backward(&cache.bn, &p.bn.gamma, &cg.input)?;
        conv.push(BlockGrads {
            gamma,
            beta,
            weight: cg.weight.into_data(),
            bias: cg.bias,
        });
        g = gx;
    }
    conv.reverse();
    Ok(Gradients { conv: Some(conv), fc })
}
