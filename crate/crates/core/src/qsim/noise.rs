//! Noisy block evaluation: depolarizing trajectories and finite-shot readout.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::ansatz::{apply_entanglers, apply_rotations, block_forward, check_n_out, encode, BlockParams};
use super::state::Pauli;
use crate::error::{Error, Result};

/// Per-qubit depolarizing rate after each ansatz layer plus readout shots.
///
/// `shots == None` means exact expectations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub p: f64,
    pub shots: Option<u64>,
    pub trajectories: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::noiseless()
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig {
            p: 0.0,
            shots: None,
            trajectories: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // lambda = 1 - p must lie in (0, 1]
        if !(self.p >= 0.0 && self.p < 1.0) {
            return Err(Error::invalid(format!("depolarizing p must be in [0, 1), got {}", self.p)));
        }
        if self.shots == Some(0) {
            return Err(Error::invalid("shot count must be at least 1"));
        }
        if self.trajectories == 0 {
            return Err(Error::invalid("trajectory count must be at least 1"));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        1.0 - self.p
    }

    pub fn is_noiseless(&self) -> bool {
        self.p == 0.0 && self.shots.is_none()
    }
}

/// With probability `3p/4` applies a uniformly chosen Pauli to each wire.
fn depolarize<R: Rng + ?Sized>(state: &mut super::state::StateVector, p: f64, rng: &mut R) {
    let hit = 0.75 * p;
    for w in 0..state.n_qubits() {
        if rng.random::<f64>() < hit {
            let pauli = match rng.random_range(0..3) {
                0 => Pauli::X,
                1 => Pauli::Y,
                _ => Pauli::Z,
            };
            state.apply_pauli(w, pauli);
        }
    }
}

/// Replaces each exact `<Z>` by the mean of `shots` independent +/-1 outcomes.
pub fn sample_shots<R: Rng + ?Sized>(expectations: &mut [f64], shots: u64, rng: &mut R) {
    for z in expectations.iter_mut() {
        let prob = ((1.0 + *z) / 2.0).clamp(0.0, 1.0);
        let k = Binomial::new(shots, prob).expect("probability in [0, 1]").sample(rng);
        *z = 2.0 * k as f64 / shots as f64 - 1.0;
    }
}

/// Trajectory-averaged expectations, then optional shot sampling.
pub fn block_forward_noisy<R: Rng + ?Sized>(
    features: &[f64],
    params: &BlockParams,
    n_out: usize,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    noise.validate()?;
    check_n_out(n_out, features.len())?;
    let mut z = if noise.p == 0.0 {
        block_forward(features, params, n_out)?
    } else {
        super::ansatz::check_params(features.len(), params)?;
        let encoded = encode(features)?;
        let mut acc = vec![0.0; n_out];
        for _ in 0..noise.trajectories {
            let mut s = encoded.clone();
            for layer in 0..params.depth() {
                apply_rotations(&mut s, params.angles(), layer);
                apply_entanglers(&mut s, layer);
                depolarize(&mut s, noise.p, rng);
            }
            for (a, v) in acc.iter_mut().zip(s.leading_z(n_out)) {
                *a += v;
            }
        }
        let n = noise.trajectories as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    };
    if let Some(shots) = noise.shots {
        sample_shots(&mut z, shots, rng);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn noiseless_limit_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for q in 1..=4 {
            let p = BlockParams::random(q, 2, &mut rng);
            let h: Vec<f64> = (0..q).map(|i| 0.3 * i as f64 - 0.5).collect();
            let a = block_forward(&h, &p, q).unwrap();
            let b = block_forward_noisy(&h, &p, q, &NoiseConfig::noiseless(), &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn contraction_per_layer() {
        // q=1, zero ansatz, h=0: each layer multiplies <Z> by 1-p in expectation
        let (p, k, n) = (0.2, 3, 20_000);
        let noise = NoiseConfig { p, shots: None, trajectories: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = BlockParams::zeros(1, k);
        let samples: Vec<f64> = (0..n)
            .map(|_| block_forward_noisy(&[0.0], &params, 1, &noise, &mut rng).unwrap()[0])
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let expected = (1.0 - p).powi(k as i32);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
    }

    #[test]
    fn shot_noise_std() {
        let noise = NoiseConfig { p: 0.0, shots: Some(100), trajectories: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let params = BlockParams::zeros(1, 1);
        let n = 4000;
        let samples: Vec<f64> = (0..n)
            .map(|_| block_forward_noisy(&[FRAC_PI_2], &params, 1, &noise, &mut rng).unwrap()[0])
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((std - 0.1).abs() < 0.02, "std {std}");
    }

    #[test]
    fn invalid_noise() {
        let params = BlockParams::zeros(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for bad in [
            NoiseConfig { p: -0.1, shots: None, trajectories: 1 },
            NoiseConfig { p: 1.0, shots: None, trajectories: 1 },
            NoiseConfig { p: f64::NAN, shots: None, trajectories: 1 },
            NoiseConfig { p: 0.1, shots: Some(0), trajectories: 1 },
            NoiseConfig { p: 0.1, shots: None, trajectories: 0 },
        ] {
            assert!(block_forward_noisy(&[0.0], &params, 1, &bad, &mut rng).is_err());
        }
    }
}
