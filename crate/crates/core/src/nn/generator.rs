//! Residual generator: each block is `Linear → BatchNorm → ReLU` with its
//! output concatenated in front of its input, followed by a final affine map.
//! Numerical α spans pass through `tanh`, one-hot spans through gumbel-softmax.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::{init_uniform, LinearLayout};
use crate::transform::{Activation, OutputSpan};

const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// |z| + |c|
    pub input_width: usize,
    pub hidden: Vec<usize>,
    pub spans: Vec<OutputSpan>,
    pub output_width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BlockLayout {
    linear: LinearLayout,
    gamma: usize,
    beta: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    spec: GeneratorSpec,
    blocks: Vec<BlockLayout>,
    out: LinearLayout,
    params: Vec<f64>,
}

/// Activations kept from the forward pass for backpropagation.
pub struct GeneratorCache {
    block_inputs: Vec<Matrix>,
    normalized: Vec<Matrix>,
    relu_out: Vec<Matrix>,
    inv_std: Vec<Vec<f64>>,
    last: Matrix,
}

impl Generator {
    fn layout(spec: &GeneratorSpec) -> (Vec<BlockLayout>, LinearLayout, usize) {
        let mut offset = 0;
        let mut width = spec.input_width;
        let mut blocks = Vec::with_capacity(spec.hidden.len());
        for h in &spec.hidden {
            let linear = LinearLayout::at(&mut offset, width, *h);
            let gamma = offset;
            let beta = offset + h;
            offset += 2 * h;
            blocks.push(BlockLayout { linear, gamma, beta });
            width += h;
        }
        let out = LinearLayout::at(&mut offset, width, spec.output_width);
        (blocks, out, offset)
    }

    pub fn new<R: Rng + ?Sized>(spec: GeneratorSpec, rng: &mut R) -> Self {
        let (blocks, out, n) = Self::layout(&spec);
        let mut params = vec![0.0; n];
        for b in &blocks {
            init_uniform(&mut params, &b.linear, rng);
            params[b.gamma..b.gamma + b.linear.output].iter_mut().for_each(|g| *g = 1.0);
        }
        init_uniform(&mut params, &out, rng);
        Generator { spec, blocks, out, params }
    }

    pub fn from_params(spec: GeneratorSpec, params: Vec<f64>) -> Option<Self> {
        let (blocks, out, n) = Self::layout(&spec);
        (params.len() == n).then_some(Generator { spec, blocks, out, params })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Raw output logits, with batch statistics in every normalisation layer.
    pub fn forward(&self, input: &Matrix) -> (Matrix, GeneratorCache) {
        assert_eq!(input.cols, self.spec.input_width, "generator input width");
        let n = input.rows;
        let mut h = input.clone();
        let mut cache = GeneratorCache {
            block_inputs: Vec::with_capacity(self.blocks.len()),
            normalized: Vec::with_capacity(self.blocks.len()),
            relu_out: Vec::with_capacity(self.blocks.len()),
            inv_std: Vec::with_capacity(self.blocks.len()),
            last: Matrix::zeros(0, 0),
        };
        for b in &self.blocks {
            let width = b.linear.output;
            let mut z = b.linear.forward(&self.params, &h);
            let mut inv_std = vec![0.0; width];
            for (j, inv) in inv_std.iter_mut().enumerate() {
                let mut mean = 0.0;
                for i in 0..n {
                    mean += z.data[i * width + j];
                }
                mean /= n as f64;
                let mut var = 0.0;
                for i in 0..n {
                    let d = z.data[i * width + j] - mean;
                    var += d * d;
                }
                var /= n as f64;
                *inv = 1.0 / libm::sqrt(var + BN_EPS);
                for i in 0..n {
                    z.data[i * width + j] = (z.data[i * width + j] - mean) * *inv;
                }
            }
            let gamma = &self.params[b.gamma..b.gamma + width];
            let beta = &self.params[b.beta..b.beta + width];
            let mut r = Matrix::zeros(n, width);
            for i in 0..n {
                for j in 0..width {
                    let y = gamma[j] * z.data[i * width + j] + beta[j];
                    r.data[i * width + j] = if y > 0.0 { y } else { 0.0 };
                }
            }
            let next = r.hcat(&h);
            cache.block_inputs.push(h);
            cache.normalized.push(z);
            cache.relu_out.push(r);
            cache.inv_std.push(inv_std);
            h = next;
        }
        let logits = self.out.forward(&self.params, &h);
        cache.last = h;
        (logits, cache)
    }

    /// Parameter gradient for the given gradient with respect to the logits.
    pub fn backward(&self, cache: &GeneratorCache, d_logits: &Matrix) -> Vec<f64> {
        let mut grads = vec![0.0; self.params.len()];
        let mut dh = self.out.backward(&self.params, &cache.last, d_logits, &mut grads, true);
        for (l, b) in self.blocks.iter().enumerate().rev() {
            let width = b.linear.output;
            let h_in = &cache.block_inputs[l];
            let xhat = &cache.normalized[l];
            let relu = &cache.relu_out[l];
            let inv_std = &cache.inv_std[l];
            let n = h_in.rows;
            let d_in_width = h_in.cols;

            // Split the gradient of [relu | input].
            let mut dy = Matrix::zeros(n, width);
            let mut d_direct = Matrix::zeros(n, d_in_width);
            for i in 0..n {
                let row = dh.row(i);
                for j in 0..width {
                    if relu.data[i * width + j] > 0.0 {
                        dy.data[i * width + j] = row[j];
                    }
                }
                d_direct.row_mut(i).copy_from_slice(&row[width..]);
            }

            let gamma = &self.params[b.gamma..b.gamma + width];
            let mut dz = Matrix::zeros(n, width);
            for j in 0..width {
                let mut d_gamma = 0.0;
                let mut d_beta = 0.0;
                let mut sum_dxhat = 0.0;
                let mut sum_dxhat_xhat = 0.0;
                for i in 0..n {
                    let g = dy.data[i * width + j];
                    let x = xhat.data[i * width + j];
                    d_gamma += g * x;
                    d_beta += g;
                    let dx = g * gamma[j];
                    sum_dxhat += dx;
                    sum_dxhat_xhat += dx * x;
                }
                grads[b.gamma + j] += d_gamma;
                grads[b.beta + j] += d_beta;
                let scale = inv_std[j] / n as f64;
                for i in 0..n {
                    let dx = dy.data[i * width + j] * gamma[j];
                    let x = xhat.data[i * width + j];
                    dz.data[i * width + j] = scale * (n as f64 * dx - sum_dxhat - x * sum_dxhat_xhat);
                }
            }
            let mut d_prev = b.linear.backward(&self.params, h_in, &dz, &mut grads, l > 0);
            if l > 0 {
                d_prev.data.iter_mut().zip(&d_direct.data).for_each(|(a, b)| *a += b);
            }
            dh = d_prev;
        }
        grads
    }

    /// Generates activated rows with fresh gumbel noise.
    pub fn generate<R: Rng + ?Sized>(&self, input: &Matrix, tau: f64, rng: &mut R) -> Matrix {
        let (logits, _) = self.forward(input);
        let noise = gumbel_noise(logits.rows, &self.spec.spans, rng);
        activate(&logits, &self.spec.spans, tau, Some(&noise))
    }
}

/// Gumbel(0, 1) draws on softmax spans, zero elsewhere.
pub fn gumbel_noise<R: Rng + ?Sized>(rows: usize, spans: &[OutputSpan], rng: &mut R) -> Matrix {
    let width = spans.iter().map(|s| s.start + s.width).max().unwrap_or(0);
    let mut m = Matrix::zeros(rows, width);
    for i in 0..rows {
        for s in spans.iter().filter(|s| s.activation == Activation::Softmax) {
            for j in s.range() {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                m.data[i * width + j] = -libm::log(-libm::log(u));
            }
        }
    }
    m
}

/// `tanh` on α spans and `softmax((logits + noise) / tau)` on one-hot spans.
pub fn activate(logits: &Matrix, spans: &[OutputSpan], tau: f64, noise: Option<&Matrix>) -> Matrix {
    let mut out = Matrix::zeros(logits.rows, logits.cols);
    for i in 0..logits.rows {
        let src = logits.row(i);
        let dst = out.row_mut(i);
        for s in spans {
            match s.activation {
                Activation::Tanh => {
                    for j in s.range() {
                        dst[j] = libm::tanh(src[j]);
                    }
                }
                Activation::Softmax => {
                    let noise_row = noise.map(|m| m.row(i));
                    let mut max = f64::NEG_INFINITY;
                    for j in s.range() {
                        let v = (src[j] + noise_row.map_or(0.0, |r| r[j])) / tau;
                        dst[j] = v;
                        max = max.max(v);
                    }
                    let mut total = 0.0;
                    for j in s.range() {
                        dst[j] = libm::exp(dst[j] - max);
                        total += dst[j];
                    }
                    for j in s.range() {
                        dst[j] /= total;
                    }
                }
            }
        }
    }
    out
}

/// Gradient through [`activate`] given its output.
pub fn activation_backward(activated: &Matrix, spans: &[OutputSpan], tau: f64, d_out: &Matrix) -> Matrix {
    let mut d = Matrix::zeros(activated.rows, activated.cols);
    for i in 0..activated.rows {
        let y = activated.row(i);
        let dy = d_out.row(i);
        let dst = d.row_mut(i);
        for s in spans {
            match s.activation {
                Activation::Tanh => {
                    for j in s.range() {
                        dst[j] = (1.0 - y[j] * y[j]) * dy[j];
                    }
                }
                Activation::Softmax => {
                    let dot: f64 = s.range().map(|j| y[j] * dy[j]).sum();
                    for j in s.range() {
                        dst[j] = y[j] * (dy[j] - dot) / tau;
                    }
                }
            }
        }
    }
    d
}
