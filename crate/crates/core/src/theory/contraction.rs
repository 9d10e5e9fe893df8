//! Signal contraction in one deep coherent circuit under per-layer
//! depolarizing noise: `E[y~] ~ lambda^D y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::write_rows;
use crate::error::{Error, Result};
use crate::qsim::{block_forward, block_forward_density, BlockParams, MAX_DENSITY_QUBITS};

/// Points with `|y|` below this are too ill-conditioned to enter the fit.
pub const MIN_SIGNAL: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionPoint {
    pub depth: usize,
    pub input: usize,
    pub ideal: f64,
    pub noisy: f64,
    pub ratio: f64,
    pub used: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionReport {
    pub q: usize,
    pub max_depth: usize,
    pub p: f64,
    pub wire: usize,
    pub lambda_fit: f64,
    pub lambda_expected: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: Vec<ContractionPoint>,
}

impl ContractionReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.points.iter().map(|pt| {
            vec![
                pt.depth.to_string(),
                pt.input.to_string(),
                pt.ideal.to_string(),
                pt.noisy.to_string(),
                pt.ratio.to_string(),
                pt.used.to_string(),
            ]
        });
        write_rows(path, &["depth", "input", "ideal", "noisy", "ratio", "used"], rows)
    }
}

/// Evaluates the first `D` layers of one fixed random ansatz for
/// `D = 1..=max_depth` on `n_inputs` random encodings, then fits
/// `ln(E[y~]/y) = D ln(lambda)` through the origin by least squares.
pub fn deep_contraction_experiment(
    q: usize,
    max_depth: usize,
    p: f64,
    wire: usize,
    n_inputs: usize,
    seed: u64,
) -> Result<ContractionReport> {
    if q == 0 || q > MAX_DENSITY_QUBITS {
        return Err(Error::DensityTooLarge { q, max: MAX_DENSITY_QUBITS });
    }
    if wire >= q || max_depth == 0 {
        return Err(Error::invalid(format!("need wire < q and depth >= 1, got wire {wire}, depth {max_depth}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = BlockParams::random(q, max_depth, &mut rng);
    let inputs: Vec<Vec<f64>> = (0..n_inputs)
        .map(|_| (0..q).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect())
        .collect();
    let mut points = Vec::new();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for depth in 1..=max_depth {
        let bp = BlockParams::new(q, depth, full.angles()[..BlockParams::len_for(q, depth)].to_vec())?;
        for (i, h) in inputs.iter().enumerate() {
            let ideal = block_forward(h, &bp, wire + 1)?[wire];
            let noisy = block_forward_density(h, &bp, wire + 1, p)?[wire];
            let ratio = noisy / ideal;
            let used = ideal.abs() >= MIN_SIGNAL && ratio > 0.0;
            if used {
                sxy += depth as f64 * ratio.ln();
                sxx += (depth * depth) as f64;
            }
            points.push(ContractionPoint { depth, input: i, ideal, noisy, ratio, used });
        }
    }
    if sxx == 0.0 {
        return Err(Error::invalid("no point has |y| >= 0.1; the fit is ill-conditioned"));
    }
    let lambda_fit = (sxy / sxx).exp();
    let lambda_expected = 1.0 - p;
    let relative_error = (lambda_fit - lambda_expected).abs() / lambda_expected;
    let tolerance = 0.05;
    Ok(ContractionReport {
        q,
        max_depth,
        p,
        wire,
        lambda_fit,
        lambda_expected,
        relative_error,
        tolerance,
        pass: relative_error <= tolerance,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_ratio_is_one() {
        let r = deep_contraction_experiment(2, 6, 0.0, 0, 4, 1).unwrap();
        assert!(r.points.iter().filter(|p| p.used).all(|p| (p.ratio - 1.0).abs() < 1e-10));
        assert!((r.lambda_fit - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_qubit_zero_ansatz_is_exact() {
        let p = 0.03;
        for depth in 1..=10 {
            let bp = BlockParams::zeros(1, depth);
            let y = block_forward_density(&[0.0], &bp, 1, p).unwrap()[0];
            assert!((y - (1.0 - p).powi(depth as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(deep_contraction_experiment(7, 3, 0.1, 0, 2, 0).is_err());
        assert!(deep_contraction_experiment(2, 3, 0.1, 2, 2, 0).is_err());
    }
}
