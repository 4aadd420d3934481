//! Small dense networks with hand-written backpropagation.

mod adam;
mod critic;
mod generator;
mod matrix;

pub use adam::{Adam, AdamConfig};
pub use critic::{Critic, CriticCache, CriticSpec};
pub use generator::{activate, activation_backward, gumbel_noise, Generator, GeneratorCache, GeneratorSpec};
pub use matrix::{gemm, Matrix};

use rand::Rng;

/// Offsets of an affine map `y = x·W + b` inside a flat parameter buffer.
/// `W` is stored row-major as `input × output`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LinearLayout {
    pub input: usize,
    pub output: usize,
    pub w: usize,
    pub b: usize,
}

impl LinearLayout {
    pub fn at(offset: &mut usize, input: usize, output: usize) -> Self {
        let w = *offset;
        let b = w + input * output;
        *offset = b + output;
        LinearLayout { input, output, w, b }
    }

    pub fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.w..self.w + self.input * self.output]
    }

    pub fn forward(&self, params: &[f64], x: &Matrix) -> Matrix {
        assert_eq!(x.cols, self.input, "linear input width");
        let mut y = Matrix::zeros(x.rows, self.output);
        let bias = &params[self.b..self.b + self.output];
        for i in 0..x.rows {
            y.row_mut(i).copy_from_slice(bias);
        }
        gemm(x.rows, self.input, self.output, &x.data, false, self.weights(params), false, &mut y.data, true);
        y
    }

    /// Accumulates `dW`, `db` into `grads`; returns `dx` when `need_input`.
    pub fn backward(&self, params: &[f64], x: &Matrix, dy: &Matrix, grads: &mut [f64], need_input: bool) -> Matrix {
        let n = x.rows;
        gemm(
            self.input,
            n,
            self.output,
            &x.data,
            true,
            &dy.data,
            false,
            &mut grads[self.w..self.w + self.input * self.output],
            true,
        );
        for i in 0..n {
            for (g, d) in grads[self.b..self.b + self.output].iter_mut().zip(dy.row(i)) {
                *g += d;
            }
        }
        if !need_input {
            return Matrix::zeros(0, 0);
        }
        let mut dx = Matrix::zeros(n, self.input);
        gemm(n, self.output, self.input, &dy.data, false, self.weights(params), true, &mut dx.data, false);
        dx
    }
}

/// Uniform `±1/√fan_in` initialisation of weights and bias.
pub(crate) fn init_uniform<R: Rng + ?Sized>(params: &mut [f64], layer: &LinearLayout, rng: &mut R) {
    let bound = 1.0 / libm::sqrt(layer.input.max(1) as f64);
    for p in &mut params[layer.w..layer.b + layer.output] {
        *p = rng.random_range(-bound..bound);
    }
}
