//! Forward cost of a parallel network as the input width grows.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{parse_topology, ArchOptions, MixingRule, Network};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub dims: Vec<usize>,
    /// Best-of-`repeats` wall time for the whole batch, in seconds.
    pub seconds: Vec<f64>,
    /// Least-squares slope of `ln t` against `ln d`.
    pub exponent: f64,
}

/// Times `samples` forward passes through a `q = 3` parallel network of
/// width `d` for each entry of `dims`.
pub fn linear_scaling(dims: &[usize], samples: usize, repeats: usize, seed: u64) -> Result<ScalingReport> {
    if dims.len() < 2 || dims.iter().any(|&d| d == 0 || d % 3 != 0) {
        return Err(Error::invalid("need at least two widths, each a positive multiple of 3"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seconds = Vec::with_capacity(dims.len());
    for &d in dims {
        let opts = ArchOptions {
            q: 3,
            hidden_layers: 1,
            depth: 2,
            mixing: MixingRule::Parallel,
            ..ArchOptions::default()
        };
        let net = Network::new(parse_topology(&d.to_string(), &opts)?)?;
        let params = net.init_params(&mut rng);
        let xs: Vec<Vec<f64>> = (0..samples).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let mut sink = 0.0;
            for x in &xs {
                sink += net.predict(&params, x)?[0];
            }
            std::hint::black_box(sink);
            best = best.min(start.elapsed().as_secs_f64());
        }
        seconds.push(best);
    }
    let lx: Vec<f64> = dims.iter().map(|&d| (d as f64).ln()).collect();
    let ly: Vec<f64> = seconds.iter().map(|t| t.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ScalingReport { dims: dims.to_vec(), seconds, exponent: sxy / sxx })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_one_time_per_width() {
        let r = linear_scaling(&[6, 12], 5, 1, 0).unwrap();
        assert_eq!(r.seconds.len(), 2);
        assert!(r.exponent.is_finite());
        assert!(linear_scaling(&[6], 5, 1, 0).is_err());
        assert!(linear_scaling(&[6, 7], 5, 1, 0).is_err());
    }
}
