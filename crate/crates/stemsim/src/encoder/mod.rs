//! The convolutional embedding network: strided valid-padding conv blocks
//! with ReLU, global average pooling, one fully connected layer, then L2
//! normalization onto the unit sphere. Forward and backward passes are
//! implemented exactly, in double precision, via im2col and matrix products.

mod io;
mod ops;

use ndarray::{Array1, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_model, save_model};

/// Pre-normalization norms below this trigger the zero-vector guard: the
/// output is the first canonical basis vector and no gradient flows.
pub const NORM_GUARD: f64 = 1e-12;

/// One strided convolution block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvBlockSpec {
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
}

/// Network shape: conv blocks, then global average pooling and a fully
/// connected map to `embedding_dim`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderArch {
    pub conv_blocks: Vec<ConvBlockSpec>,
    pub embedding_dim: usize,
}

impl Default for EncoderArch {
    fn default() -> Self {
        EncoderArch {
            conv_blocks: [32, 64, 128, 128]
                .iter()
                .map(|&c| ConvBlockSpec {
                    out_channels: c,
                    kernel: (3, 3),
                    stride: (2, 2),
                })
                .collect(),
            embedding_dim: 128,
        }
    }
}

impl EncoderArch {
    /// A deliberately small architecture for quick experiments and
    /// gradient checks.
    pub fn reduced(channels: &[usize], embedding_dim: usize) -> Self {
        EncoderArch {
            conv_blocks: channels
                .iter()
                .map(|&c| ConvBlockSpec {
                    out_channels: c,
                    kernel: (3, 3),
                    stride: (2, 2),
                })
                .collect(),
            embedding_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_blocks.is_empty() {
            return Err(Error::InvalidConfig("arch needs at least one conv block".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::InvalidConfig("embedding_dim must be >= 1".into()));
        }
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if b.out_channels == 0
                || b.kernel.0 == 0
                || b.kernel.1 == 0
                || b.stride.0 == 0
                || b.stride.1 == 0
            {
                return Err(Error::InvalidConfig(format!(
                    "conv block {i}: channels, kernel and stride must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Spatial size after each block for the given input, each axis
    /// following `floor((d - k)/s) + 1`. Errors if any block would shrink
    /// a dimension below one.
    pub fn feature_map_shapes(&self, input: (usize, usize)) -> Result<Vec<(usize, usize)>> {
        self.validate()?;
        let mut shapes = Vec::with_capacity(self.conv_blocks.len());
        let (mut h, mut w) = input;
        for (i, b) in self.conv_blocks.iter().enumerate() {
            if h < b.kernel.0 || w < b.kernel.1 {
                return Err(Error::DimensionMismatch(format!(
                    "block {i}: feature map {h}x{w} smaller than kernel {}x{}",
                    b.kernel.0, b.kernel.1
                )));
            }
            h = (h - b.kernel.0) / b.stride.0 + 1;
            w = (w - b.kernel.1) / b.stride.1 + 1;
            shapes.push((h, w));
        }
        Ok(shapes)
    }

    fn block_in_channels(&self, block: usize) -> usize {
        if block == 0 {
            1
        } else {
            self.conv_blocks[block - 1].out_channels
        }
    }

    pub fn last_channels(&self) -> usize {
        self.conv_blocks.last().map(|b| b.out_channels).unwrap_or(1)
    }
}

/// Weights of one conv block: the kernel flattened to
/// `[out_channels, in_channels * kh * kw]` plus a per-channel bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// All learnable parameters of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub arch: EncoderArch,
    pub conv: Vec<ConvLayer>,
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
}

/// Gradients with the same tensor layout as [`EncoderParams`].
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub conv: Vec<ConvLayer>,
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
}

impl EncoderParams {
    /// Parameter tensors in declaration order (conv weight, conv bias per
    /// block, then FC weight and bias), as contiguous slices.
    pub fn flat_tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.conv.len() * 2 + 2);
        for layer in &self.conv {
            out.push(layer.weight.as_slice().expect("contiguous"));
            out.push(layer.bias.as_slice().expect("contiguous"));
        }
        out.push(self.fc_weight.as_slice().expect("contiguous"));
        out.push(self.fc_bias.as_slice().expect("contiguous"));
        out
    }

    pub fn flat_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.conv.len() * 2 + 2);
        for layer in &mut self.conv {
            out.push(layer.weight.as_slice_mut().expect("contiguous"));
            out.push(layer.bias.as_slice_mut().expect("contiguous"));
        }
        out.push(self.fc_weight.as_slice_mut().expect("contiguous"));
        out.push(self.fc_bias.as_slice_mut().expect("contiguous"));
        out
    }

    pub fn n_parameters(&self) -> usize {
        self.flat_tensors().iter().map(|t| t.len()).sum()
    }
}

impl ParamGrads {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        ParamGrads {
            conv: params
                .conv
                .iter()
                .map(|l| ConvLayer {
                    weight: Array2::zeros(l.weight.dim()),
                    bias: Array1::zeros(l.bias.dim()),
                })
                .collect(),
            fc_weight: Array2::zeros(params.fc_weight.dim()),
            fc_bias: Array1::zeros(params.fc_bias.dim()),
        }
    }

    pub fn flat_tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.conv.len() * 2 + 2);
        for layer in &self.conv {
            out.push(layer.weight.as_slice().expect("contiguous"));
            out.push(layer.bias.as_slice().expect("contiguous"));
        }
        out.push(self.fc_weight.as_slice().expect("contiguous"));
        out.push(self.fc_bias.as_slice().expect("contiguous"));
        out
    }

    pub fn flat_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.conv.len() * 2 + 2);
        for layer in &mut self.conv {
            out.push(layer.weight.as_slice_mut().expect("contiguous"));
            out.push(layer.bias.as_slice_mut().expect("contiguous"));
        }
        out.push(self.fc_weight.as_slice_mut().expect("contiguous"));
        out.push(self.fc_bias.as_slice_mut().expect("contiguous"));
        out
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (mine, theirs) in self.flat_tensors_mut().into_iter().zip(other.flat_tensors()) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.flat_tensors_mut() {
            for v in t {
                *v *= factor;
            }
        }
    }
}

/// He-initialized parameters: weights from N(0, sqrt(2/fan_in)), biases
/// zero. Deterministic per seed.
pub fn init_params(arch: &EncoderArch, seed: u64) -> Result<EncoderParams> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conv = Vec::with_capacity(arch.conv_blocks.len());
    for (i, block) in arch.conv_blocks.iter().enumerate() {
        let in_c = arch.block_in_channels(i);
        let fan_in = in_c * block.kernel.0 * block.kernel.1;
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        let weight = Array2::from_shape_fn((block.out_channels, fan_in), |_| dist.sample(&mut rng));
        conv.push(ConvLayer {
            weight,
            bias: Array1::zeros(block.out_channels),
        });
    }
    let fan_in = arch.last_channels();
    let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    let fc_weight = Array2::from_shape_fn((arch.embedding_dim, fan_in), |_| dist.sample(&mut rng));
    Ok(EncoderParams {
        arch: arch.clone(),
        conv,
        fc_weight,
        fc_bias: Array1::zeros(arch.embedding_dim),
    })
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache {
    input_dim: (usize, usize),
    /// im2col matrix per block, `[in_c*kh*kw, oh*ow]`.
    cols: Vec<Array2<f64>>,
    /// Conv output before ReLU per block, `[out_c, oh*ow]`.
    pre_acts: Vec<Array2<f64>>,
    shapes: Vec<(usize, usize)>,
    pooled: Array1<f64>,
    pre_norm: Array1<f64>,
    norm: f64,
    guarded: bool,
}

impl ForwardCache {
    pub fn embedding_norm(&self) -> f64 {
        self.norm
    }

    /// Smallest |pre-activation| across all conv blocks. Finite-difference
    /// gradient checks are only meaningful when this is comfortably larger
    /// than the step size, since a ReLU gate flipping under perturbation
    /// invalidates the central-difference estimate.
    #[doc(hidden)]
    pub fn min_abs_pre_activation(&self) -> f64 {
        self.pre_acts
            .iter()
            .flat_map(|m| m.iter())
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
    }
}

/// Forward pass from a single-channel input matrix to a unit-norm
/// embedding, retaining the activations needed for [`backward`].
pub fn forward(params: &EncoderParams, input: &Array2<f64>) -> Result<(Array1<f64>, ForwardCache)> {
    let (h, w) = input.dim();
    let shapes = params.arch.feature_map_shapes((h, w))?;
    check_param_shapes(params)?;

    let mut cols_cache = Vec::with_capacity(params.conv.len());
    let mut pre_acts = Vec::with_capacity(params.conv.len());

    let mut current: Array3<f64> = input
        .to_owned()
        .insert_axis(ndarray::Axis(0));
    for (i, (block, layer)) in params.arch.conv_blocks.iter().zip(&params.conv).enumerate() {
        let (cols, out_shape) = ops::im2col(&current, block.kernel, block.stride);
        let mut pre = layer.weight.dot(&cols);
        for (mut row, &b) in pre.rows_mut().into_iter().zip(layer.bias.iter()) {
            row.mapv_inplace(|v| v + b);
        }
        debug_assert_eq!(out_shape, shapes[i]);
        let post = pre.mapv(|v| v.max(0.0));
        current = post
            .into_shape_with_order((block.out_channels, out_shape.0, out_shape.1))
            .expect("conv output reshapes");
        cols_cache.push(cols);
        pre_acts.push(pre);
    }

    // Global average pooling over the remaining grid.
    let last = &pre_acts[pre_acts.len() - 1];
    let n_pos = last.ncols() as f64;
    let pooled = Array1::from_iter(
        last.rows()
            .into_iter()
            .map(|row| row.iter().map(|v| v.max(0.0)).sum::<f64>() / n_pos),
    );

    let pre_norm = params.fc_weight.dot(&pooled) + &params.fc_bias;
    let norm = pre_norm.dot(&pre_norm).sqrt();
    let (embedding, guarded) = if norm < NORM_GUARD {
        let mut e = Array1::zeros(params.arch.embedding_dim);
        e[0] = 1.0;
        (e, true)
    } else {
        (&pre_norm / norm, false)
    };

    Ok((
        embedding,
        ForwardCache {
            input_dim: (h, w),
            cols: cols_cache,
            pre_acts,
            shapes,
            pooled,
            pre_norm,
            norm,
            guarded,
        },
    ))
}

/// Embedding without keeping the cache.
pub fn embed(params: &EncoderParams, input: &Array2<f64>) -> Result<Array1<f64>> {
    forward(params, input).map(|(e, _)| e)
}

/// Gradient of the normalization layer `e = v / ||v||`:
/// `grad_v = (g - (g·e) e) / ||v||`, the tangent projection of the upstream
/// gradient scaled by the inverse norm.
pub fn normalization_backward(
    embedding: &Array1<f64>,
    norm: f64,
    upstream: &Array1<f64>,
) -> Array1<f64> {
    let radial = upstream.dot(embedding);
    (upstream - &(embedding * radial)) / norm
}

/// Exact gradients of the upstream scalar loss with respect to every
/// parameter tensor, given the upstream gradient at the embedding output.
pub fn backward(
    params: &EncoderParams,
    cache: &ForwardCache,
    grad_embedding: &Array1<f64>,
) -> Result<ParamGrads> {
    if grad_embedding.len() != params.arch.embedding_dim {
        return Err(Error::DimensionMismatch(format!(
            "upstream gradient has {} entries, embedding_dim is {}",
            grad_embedding.len(),
            params.arch.embedding_dim
        )));
    }
    if cache.pre_acts.len() != params.conv.len()
        || cache
            .pre_acts
            .iter()
            .zip(&params.conv)
            .any(|(pre, layer)| pre.nrows() != layer.weight.nrows())
        || params.arch.feature_map_shapes(cache.input_dim)? != cache.shapes
    {
        return Err(Error::DimensionMismatch(
            "forward cache does not match these parameters".into(),
        ));
    }

    let mut grads = ParamGrads::zeros_like(params);
    if cache.guarded {
        return Ok(grads);
    }

    let embedding = &cache.pre_norm / cache.norm;
    let grad_pre_norm = normalization_backward(&embedding, cache.norm, grad_embedding);

    // FC layer.
    for (mut row, &g) in grads.fc_weight.rows_mut().into_iter().zip(grad_pre_norm.iter()) {
        row.assign(&(&cache.pooled * g));
    }
    grads.fc_bias.assign(&grad_pre_norm);
    let grad_pooled = params.fc_weight.t().dot(&grad_pre_norm);

    // Undo the average pooling: each position receives grad/number_of_positions.
    let last_shape = cache.shapes[cache.shapes.len() - 1];
    let n_pos = last_shape.0 * last_shape.1;
    let mut grad_post = Array2::from_shape_fn(
        (params.arch.last_channels(), n_pos),
        |(c, _)| grad_pooled[c] / n_pos as f64,
    );

    for i in (0..params.conv.len()).rev() {
        let pre = &cache.pre_acts[i];
        // ReLU gate: zero where the pre-activation was not positive.
        let grad_pre = ndarray::Zip::from(&grad_post)
            .and(pre)
            .map_collect(|&g, &p| if p > 0.0 { g } else { 0.0 });

        grads.conv[i].weight = grad_pre.dot(&cache.cols[i].t());
        grads.conv[i].bias = grad_pre.sum_axis(ndarray::Axis(1));

        if i > 0 {
            let grad_cols = params.conv[i].weight.t().dot(&grad_pre);
            let in_c = params.arch.block_in_channels(i);
            let in_shape = cache.shapes[i - 1];
            let block = &params.arch.conv_blocks[i];
            let grad_input = ops::col2im(
                &grad_cols,
                in_c,
                in_shape,
                block.kernel,
                block.stride,
                cache.shapes[i],
            );
            grad_post = grad_input
                .into_shape_with_order((in_c, in_shape.0 * in_shape.1))
                .expect("gradient reshapes");
        }
    }

    Ok(grads)
}

fn check_param_shapes(params: &EncoderParams) -> Result<()> {
    for (i, (block, layer)) in params.arch.conv_blocks.iter().zip(&params.conv).enumerate() {
        let fan_in = params.arch.block_in_channels(i) * block.kernel.0 * block.kernel.1;
        if layer.weight.dim() != (block.out_channels, fan_in)
            || layer.bias.len() != block.out_channels
        {
            return Err(Error::DimensionMismatch(format!(
                "conv block {i} parameter shape does not match the arch"
            )));
        }
    }
    if params.fc_weight.dim() != (params.arch.embedding_dim, params.arch.last_channels())
        || params.fc_bias.len() != params.arch.embedding_dim
    {
        return Err(Error::DimensionMismatch(
            "fc parameter shape does not match the arch".into(),
        ));
    }
    Ok(())
}
