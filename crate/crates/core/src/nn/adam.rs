use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty folded into the gradient.
    pub weight_decay: f64,
}

/// Adam over a flat parameter buffer.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    first: Vec<f64>,
    second: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(config: AdamConfig, n_params: usize) -> Self {
        Adam { config, first: vec![0.0; n_params], second: vec![0.0; n_params], step: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.first.len());
        assert_eq!(grads.len(), self.first.len());
        let AdamConfig { learning_rate, beta1, beta2, eps, weight_decay } = self.config;
        self.step += 1;
        let bias1 = 1.0 - libm::pow(beta1, self.step as f64);
        let bias2 = 1.0 - libm::pow(beta2, self.step as f64);
        let step_size = learning_rate / bias1;
        let bias2_sqrt = libm::sqrt(bias2);
        for i in 0..params.len() {
            let g = grads[i] + weight_decay * params[i];
            self.first[i] = beta1 * self.first[i] + (1.0 - beta1) * g;
            self.second[i] = beta2 * self.second[i] + (1.0 - beta2) * g * g;
            let denom = libm::sqrt(self.second[i]) / bias2_sqrt + eps;
            params[i] -= step_size * self.first[i] / denom;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(
            AdamConfig { learning_rate: 0.1, beta1: 0.5, beta2: 0.9, eps: 1e-8, weight_decay: 0.0 },
            2,
        );
        let mut p = vec![1.0, -1.0];
        adam.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimises_quadratic() {
        let mut adam = Adam::new(
            AdamConfig { learning_rate: 0.05, beta1: 0.5, beta2: 0.9, eps: 1e-8, weight_decay: 0.0 },
            1,
        );
        let mut p = vec![4.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            adam.step(&mut p, &g);
        }
        assert!((p[0] - 1.5).abs() < 1e-2);
    }
}
