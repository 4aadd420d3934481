//! Packed critic: `(Linear → LeakyReLU → Dropout)` per hidden layer, then a
//! scalar output. Supplies the exact gradient of the gradient penalty.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{gemm, Matrix};
use super::{init_uniform, LinearLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticSpec {
    /// Width of one packed sample, `pac · (|row| + |c|)`.
    pub input_width: usize,
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub dropout: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    spec: CriticSpec,
    layers: Vec<LinearLayout>,
    out: LinearLayout,
    params: Vec<f64>,
}

pub struct CriticCache {
    /// Input of every hidden layer followed by the input of the output layer.
    inputs: Vec<Matrix>,
    /// `mask ⊙ leaky'(a)` per hidden layer; the layer output is `s ⊙ a`.
    slopes: Vec<Matrix>,
}

impl Critic {
    fn layout(spec: &CriticSpec) -> (Vec<LinearLayout>, LinearLayout, usize) {
        let mut offset = 0;
        let mut width = spec.input_width;
        let mut layers = Vec::with_capacity(spec.hidden.len());
        for h in &spec.hidden {
            layers.push(LinearLayout::at(&mut offset, width, *h));
            width = *h;
        }
        let out = LinearLayout::at(&mut offset, width, 1);
        (layers, out, offset)
    }

    pub fn new<R: Rng + ?Sized>(spec: CriticSpec, rng: &mut R) -> Self {
        let (layers, out, n) = Self::layout(&spec);
        let mut params = vec![0.0; n];
        for l in layers.iter().chain(core::iter::once(&out)) {
            init_uniform(&mut params, l, rng);
        }
        Critic { spec, layers, out, params }
    }

    pub fn from_params(spec: CriticSpec, params: Vec<f64>) -> Option<Self> {
        let (layers, out, n) = Self::layout(&spec);
        (params.len() == n).then_some(Critic { spec, layers, out, params })
    }

    pub fn spec(&self) -> &CriticSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Inverted-dropout masks (kept units scaled by `1/(1-p)`) for `rows` samples.
    pub fn sample_masks<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Vec<Matrix> {
        let p = self.spec.dropout;
        let keep = 1.0 / (1.0 - p);
        self.spec
            .hidden
            .iter()
            .map(|h| {
                let data = (0..rows * h).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
                Matrix::from_vec(rows, *h, data)
            })
            .collect()
    }

    /// Scores for packed samples. An empty `masks` slice disables dropout.
    pub fn forward(&self, x: &Matrix, masks: &[Matrix]) -> (Vec<f64>, CriticCache) {
        assert_eq!(x.cols, self.spec.input_width, "critic input width");
        assert!(masks.is_empty() || masks.len() == self.layers.len(), "one dropout mask per layer");
        let slope = self.spec.leaky_slope;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut slopes = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut a = layer.forward(&self.params, &h);
            let mut s = Matrix::zeros(a.rows, a.cols);
            for (idx, (av, sv)) in a.data.iter_mut().zip(s.data.iter_mut()).enumerate() {
                let d = if *av > 0.0 { 1.0 } else { slope };
                *sv = d * masks.get(l).map_or(1.0, |m| m.data[idx]);
                *av *= *sv;
            }
            inputs.push(h);
            slopes.push(s);
            h = a;
        }
        let scores = self.out.forward(&self.params, &h).data;
        inputs.push(h);
        (scores, CriticCache { inputs, slopes })
    }

    /// Accumulates `∂/∂θ Σ d_scores·score` into `grads`; returns the input
    /// gradient when `need_input`.
    pub fn backward(&self, cache: &CriticCache, d_scores: &[f64], grads: &mut [f64], need_input: bool) -> Option<Matrix> {
        let n = d_scores.len();
        let d = Matrix::from_vec(n, 1, d_scores.to_vec());
        let last = cache.inputs.last().expect("output layer input");
        let want = need_input || !self.layers.is_empty();
        let mut dh = self.out.backward(&self.params, last, &d, grads, want);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            dh.data.iter_mut().zip(&cache.slopes[l].data).for_each(|(g, s)| *g *= s);
            dh = layer.backward(&self.params, &cache.inputs[l], &dh, grads, need_input || l > 0);
        }
        need_input.then_some(dh)
    }

    /// `u_l = ∂score/∂(pre-activation of layer l)` per sample, and the input
    /// gradient `g` of each sample's score.
    fn input_gradients(&self, cache: &CriticCache) -> (Vec<Matrix>, Matrix) {
        let n = cache.inputs[0].rows;
        let d = self.spec.input_width;
        let w_out = self.out.weights(&self.params);
        if self.layers.is_empty() {
            let mut g = Matrix::zeros(n, d);
            for i in 0..n {
                g.row_mut(i).copy_from_slice(w_out);
            }
            return (Vec::new(), g);
        }
        let depth = self.layers.len();
        let mut us: Vec<Matrix> = Vec::with_capacity(depth);
        let last = &cache.slopes[depth - 1];
        let mut u = Matrix::zeros(n, last.cols);
        for i in 0..n {
            for (j, v) in u.row_mut(i).iter_mut().enumerate() {
                *v = last.data[i * last.cols + j] * w_out[j];
            }
        }
        us.push(u);
        for l in (0..depth - 1).rev() {
            let next = &self.layers[l + 1];
            let below = us.last().expect("pushed above");
            let mut u = Matrix::zeros(n, next.input);
            gemm(n, next.output, next.input, &below.data, false, next.weights(&self.params), true, &mut u.data, false);
            u.data.iter_mut().zip(&cache.slopes[l].data).for_each(|(a, s)| *a *= s);
            us.push(u);
        }
        us.reverse();
        let first = &self.layers[0];
        let mut g = Matrix::zeros(n, d);
        gemm(n, first.output, d, &us[0].data, false, first.weights(&self.params), true, &mut g.data, false);
        (us, g)
    }

    /// `mean_n (‖∇ₓ score(x̂_n)‖ − 1)²` under fixed dropout masks.
    pub fn penalty(&self, x_hat: &Matrix, masks: &[Matrix]) -> f64 {
        let (_, cache) = self.forward(x_hat, masks);
        let (_, g) = self.input_gradients(&cache);
        let n = g.rows as f64;
        (0..g.rows).map(|i| sq(norm(g.row(i)) - 1.0)).sum::<f64>() / n
    }

    /// Adds `weight · ∂penalty/∂θ` to `grads` and returns the penalty.
    ///
    /// The critic is piecewise linear, so the activation slopes are locally
    /// constant and the penalty gradient only flows through the weights that
    /// appear in the input gradient.
    pub fn gradient_penalty(&self, x_hat: &Matrix, masks: &[Matrix], weight: f64, grads: &mut [f64]) -> f64 {
        let (_, cache) = self.forward(x_hat, masks);
        let (us, g) = self.input_gradients(&cache);
        let n = g.rows;
        let d = g.cols;
        let mut penalty = 0.0;
        let mut gamma = Matrix::zeros(n, d);
        for i in 0..n {
            let row = g.row(i);
            let len = norm(row);
            penalty += sq(len - 1.0);
            if len > 0.0 {
                let scale = weight * 2.0 * (len - 1.0) / (len * n as f64);
                for (o, v) in gamma.row_mut(i).iter_mut().zip(row) {
                    *o = scale * v;
                }
            }
        }
        penalty /= n as f64;

        let w_out = self.out.w;
        if self.layers.is_empty() {
            for i in 0..n {
                for (j, v) in gamma.row(i).iter().enumerate() {
                    grads[w_out + j] += v;
                }
            }
            return penalty;
        }

        let first = self.layers[0];
        gemm(d, n, first.output, &gamma.data, true, &us[0].data, false, &mut grads[first.w..first.b], true);
        let mut du = Matrix::zeros(n, first.output);
        gemm(n, d, first.output, &gamma.data, false, first.weights(&self.params), false, &mut du.data, false);
        for l in 0..self.layers.len() {
            let mut t = du;
            t.data.iter_mut().zip(&cache.slopes[l].data).for_each(|(a, s)| *a *= s);
            if let Some(next) = self.layers.get(l + 1) {
                gemm(next.input, n, next.output, &t.data, true, &us[l + 1].data, false, &mut grads[next.w..next.b], true);
                du = Matrix::zeros(n, next.output);
                gemm(n, next.input, next.output, &t.data, false, next.weights(&self.params), false, &mut du.data, false);
            } else {
                for i in 0..n {
                    for (j, v) in t.row(i).iter().enumerate() {
                        grads[w_out + j] += v;
                    }
                }
                break;
            }
        }
        penalty
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}
