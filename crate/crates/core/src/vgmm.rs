//! One-dimensional variational Bayesian Gaussian mixture with a truncated
//! Dirichlet-process (stick-breaking) weight prior.
//!
//! Mean-field coordinate ascent over a Normal-Wishart component prior, seeded
//! from a quantile-initialised 1-D k-means. Superfluous components end up with
//! near-zero weight and are pruned by the caller.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{digamma, log_sum_exp, mean, variance, LN_2PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureConfig {
    pub max_components: usize,
    pub weight_concentration: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub reg_covar: f64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            max_components: 10,
            weight_concentration: 1e-3,
            max_iter: 100,
            tol: 1e-3,
            reg_covar: 1e-6,
        }
    }
}

/// Posterior-expected weights, component means and standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub iterations: usize,
}

struct Posterior {
    // Beta stick-breaking parameters.
    stick_a: Vec<f64>,
    stick_b: Vec<f64>,
    mean_precision: Vec<f64>,
    means: Vec<f64>,
    dof: Vec<f64>,
    // Wishart-scaled variances (covariance / dof).
    variances: Vec<f64>,
}

/// Fits the mixture; `values` must hold at least two distinct numbers.
pub fn fit_variational_mixture(values: &[f64], config: &MixtureConfig) -> FittedMixture {
    let k = config.max_components.max(1).min(values.len());
    let n = values.len();
    let prior_mean = mean(values);
    let prior_var = if n > 1 { variance(values, 1) } else { 1.0 };
    let prior_precision = 1.0;
    let prior_dof = 1.0;

    let mut resp = kmeans_responsibilities(values, k);
    let mut post = m_step(values, &resp, k, config, prior_mean, prior_var, prior_precision, prior_dof);
    let mut previous = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut weighted = vec![0.0; k];

    for iter in 1..=config.max_iter {
        iterations = iter;
        let log_weights = expected_log_weights(&post);
        let mut total_norm = 0.0;
        for (i, x) in values.iter().enumerate() {
            for c in 0..k {
                weighted[c] = expected_log_prob(*x, &post, c) + log_weights[c];
            }
            let norm = log_sum_exp(&weighted);
            total_norm += norm;
            for c in 0..k {
                resp[i * k + c] = libm::exp(weighted[c] - norm);
            }
        }
        post = m_step(values, &resp, k, config, prior_mean, prior_var, prior_precision, prior_dof);
        let current = total_norm / n as f64;
        if (current - previous).abs() < config.tol {
            break;
        }
        previous = current;
    }

    let mut weights = Vec::with_capacity(k);
    let mut remaining = 1.0;
    for c in 0..k {
        let frac = post.stick_a[c] / (post.stick_a[c] + post.stick_b[c]);
        weights.push(frac * remaining);
        remaining *= 1.0 - frac;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    FittedMixture {
        weights,
        means: post.means,
        stds: post.variances.iter().map(|v| libm::sqrt(*v)).collect(),
        iterations,
    }
}

fn expected_log_weights(post: &Posterior) -> Vec<f64> {
    let mut out = Vec::with_capacity(post.stick_a.len());
    let mut carried = 0.0;
    for (a, b) in post.stick_a.iter().zip(&post.stick_b) {
        let sum = digamma(a + b);
        out.push(digamma(*a) - sum + carried);
        carried += digamma(*b) - sum;
    }
    out
}

fn expected_log_prob(x: f64, post: &Posterior, c: usize) -> f64 {
    let precision_chol = 1.0 / libm::sqrt(post.variances[c]);
    let y = (x - post.means[c]) * precision_chol;
    let log_gauss = -0.5 * (LN_2PI + y * y) + libm::log(precision_chol) - 0.5 * libm::log(post.dof[c]);
    let log_lambda = core::f64::consts::LN_2 + digamma(0.5 * post.dof[c]);
    log_gauss + 0.5 * (log_lambda - 1.0 / post.mean_precision[c])
}

#[allow(clippy::too_many_arguments)]
fn m_step(
    values: &[f64],
    resp: &[f64],
    k: usize,
    config: &MixtureConfig,
    prior_mean: f64,
    prior_var: f64,
    prior_precision: f64,
    prior_dof: f64,
) -> Posterior {
    let mut nk = vec![10.0 * f64::EPSILON; k];
    let mut sums = vec![0.0; k];
    for (i, x) in values.iter().enumerate() {
        for c in 0..k {
            let r = resp[i * k + c];
            nk[c] += r;
            sums[c] += r * x;
        }
    }
    let xk: Vec<f64> = sums.iter().zip(&nk).map(|(s, n)| s / n).collect();
    let mut sk = vec![0.0; k];
    for (i, x) in values.iter().enumerate() {
        for c in 0..k {
            let d = x - xk[c];
            sk[c] += resp[i * k + c] * d * d;
        }
    }
    for c in 0..k {
        sk[c] = sk[c] / nk[c] + config.reg_covar;
    }

    let mut stick_b = vec![config.weight_concentration; k];
    let mut tail = 0.0;
    for c in (0..k).rev() {
        stick_b[c] += tail;
        tail += nk[c];
    }
    let stick_a: Vec<f64> = nk.iter().map(|n| 1.0 + n).collect();

    let mean_precision: Vec<f64> = nk.iter().map(|n| prior_precision + n).collect();
    let means: Vec<f64> = (0..k)
        .map(|c| (prior_precision * prior_mean + nk[c] * xk[c]) / mean_precision[c])
        .collect();
    let dof: Vec<f64> = nk.iter().map(|n| prior_dof + n).collect();
    let variances: Vec<f64> = (0..k)
        .map(|c| {
            let d = xk[c] - prior_mean;
            let cov = prior_var
                + nk[c] * sk[c]
                + nk[c] * prior_precision / mean_precision[c] * d * d;
            cov / dof[c]
        })
        .collect();

    Posterior { stick_a, stick_b, mean_precision, means, dof, variances }
}

/// Hard k-means assignments (as one-hot responsibilities), centres initialised
/// at evenly spaced quantiles.
fn kmeans_responsibilities(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut centres: Vec<f64> = (0..k)
        .map(|c| sorted[((2 * c + 1) * n / (2 * k)).min(n - 1)])
        .collect();
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, x) in values.iter().enumerate() {
            let best = nearest(&centres, *x);
            if best != labels[i] {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (x, l) in values.iter().zip(&labels) {
            sums[*l] += x;
            counts[*l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centres[c] = sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let mut resp = vec![0.0; n * k];
    for (i, x) in values.iter().enumerate() {
        resp[i * k + nearest(&centres, *x)] = 1.0;
    }
    resp
}

fn nearest(centres: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, m) in centres.iter().enumerate() {
        let d = (x - m).abs();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}
