//! Bias-corrected Adam.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One update of `params` in place; shapes must match.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &AdamConfig) {
        assert_eq!(params.len(), grad.len(), "gradient shape");
        assert_eq!(params.len(), self.m.len(), "optimizer state shape");
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powf(self.t as f64);
        let c2 = 1.0 - cfg.beta2.powf(self.t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_noop() {
        let mut p = vec![0.4, -1.0];
        let mut s = AdamState::new(2);
        s.step(&mut p, &[0.0, 0.0], 0.1, &AdamConfig::default());
        assert_eq!(p, vec![0.4, -1.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        s.step(&mut p, &[1.0], 0.1, &AdamConfig::default());
        // m_hat = 1, v_hat = 1: step = 0.1 / (1 + 1e-8)
        assert!((p[0] - (1.0 - 0.1 / (1.0 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn elementwise_under_permutation() {
        let g = [0.3, -2.0, 0.01];
        let mut a = vec![0.0; 3];
        let mut b = vec![0.0; 3];
        let (mut sa, mut sb) = (AdamState::new(3), AdamState::new(3));
        for _ in 0..5 {
            sa.step(&mut a, &g, 0.01, &AdamConfig::default());
            sb.step(&mut b, &[g[2], g[0], g[1]], 0.01, &AdamConfig::default());
        }
        assert_eq!([b[1], b[2], b[0]], [a[0], a[1], a[2]]);
    }
}
