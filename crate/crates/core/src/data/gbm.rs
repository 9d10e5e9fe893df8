//! Risk-neutral GBM paths, discounted call payoffs and Black-Scholes prices.
//!
//! Path arrays are flat and row-major over `[path][step][asset]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub s0: Vec<f64>,
    pub strikes: Vec<f64>,
    pub sigma: Vec<f64>,
    pub r: f64,
    pub t: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

/// Ranges used to draw an unpublished portfolio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioDefaults {
    pub s0: f64,
    pub strike_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub r: f64,
    pub t: f64,
    pub steps: usize,
    pub paths: usize,
}

impl Default for PortfolioDefaults {
    fn default() -> Self {
        PortfolioDefaults {
            s0: 100.0,
            strike_range: (90.0, 110.0),
            sigma_range: (0.1, 0.4),
            r: 0.05,
            t: 1.0,
            steps: 10,
            paths: 1000,
        }
    }
}

impl GbmConfig {
    /// `assets` calls with strikes and volatilities drawn uniformly from the
    /// default ranges, seeded by `seed`.
    pub fn random_portfolio(assets: usize, seed: u64, defaults: &PortfolioDefaults) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let (k_lo, k_hi) = defaults.strike_range;
        let (s_lo, s_hi) = defaults.sigma_range;
        let strikes = (0..assets).map(|_| rng.random_range(k_lo..=k_hi)).collect();
        let sigma = (0..assets).map(|_| rng.random_range(s_lo..=s_hi)).collect();
        GbmConfig {
            s0: vec![defaults.s0; assets],
            strikes,
            sigma,
            r: defaults.r,
            t: defaults.t,
            steps: defaults.steps,
            paths: defaults.paths,
            seed,
        }
    }

    pub fn assets(&self) -> usize {
        self.s0.len()
    }

    pub fn dt(&self) -> f64 {
        self.t / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.assets();
        if d == 0 || self.strikes.len() != d || self.sigma.len() != d {
            return Err(Error::invalid("s0, strikes and sigma need one entry per asset"));
        }
        if self.s0.iter().any(|&s| !(s > 0.0)) || self.strikes.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::invalid("prices and strikes must be positive"));
        }
        if self.sigma.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::invalid("volatilities must be nonnegative"));
        }
        if !(self.t > 0.0) || self.steps == 0 || self.paths == 0 {
            return Err(Error::invalid("need T > 0, M >= 1 and N >= 1"));
        }
        Ok(())
    }

    /// Flat index of `[path][step][asset]`.
    pub fn index(&self, i: usize, k: usize, j: usize) -> usize {
        (i * (self.steps + 1) + k) * self.assets() + j
    }
}

/// Exact log-Euler recursion; path `i` draws from ChaCha stream `i`.
pub fn simulate_gbm(cfg: &GbmConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let (d, m) = (cfg.assets(), cfg.steps);
    let dt = cfg.dt();
    let drift: Vec<f64> = cfg.sigma.iter().map(|s| (cfg.r - 0.5 * s * s) * dt).collect();
    let vol: Vec<f64> = cfg.sigma.iter().map(|s| s * dt.sqrt()).collect();
    let per_path = (m + 1) * d;
    let mut out = vec![0.0; cfg.paths * per_path];
    out.par_chunks_mut(per_path).enumerate().for_each(|(i, path)| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        path[..d].copy_from_slice(&cfg.s0);
        for k in 1..=m {
            for j in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                path[k * d + j] = path[(k - 1) * d + j] * (drift[j] + vol[j] * z).exp();
            }
        }
    });
    Ok(out)
}

fn check_paths(paths: &[f64], cfg: &GbmConfig) -> Result<()> {
    let expected = cfg.paths * (cfg.steps + 1) * cfg.assets();
    if paths.len() != expected {
        return Err(Error::Shape {
            what: "path array",
            expected,
            got: paths.len(),
        });
    }
    Ok(())
}

/// `exp(-r (T - t_k)) * max(X_T - E_j, 0)` at every `(path, step, asset)`.
pub fn payoff_labels(paths: &[f64], cfg: &GbmConfig) -> Result<Vec<f64>> {
    check_paths(paths, cfg)?;
    let (d, m) = (cfg.assets(), cfg.steps);
    let mut out = vec![0.0; paths.len()];
    for i in 0..cfg.paths {
        for j in 0..d {
            let payoff = (paths[cfg.index(i, m, j)] - cfg.strikes[j]).max(0.0);
            for k in 0..=m {
                out[cfg.index(i, k, j)] = (-cfg.r * (cfg.t - cfg.time(k))).exp() * payoff;
            }
        }
    }
    Ok(out)
}

/// European call under Black-Scholes; `tau = 0` gives the intrinsic value.
pub fn black_scholes_call(s: f64, e: f64, r: f64, sigma: f64, tau: f64) -> Result<f64> {
    if !(s > 0.0 && e > 0.0 && tau >= 0.0 && sigma >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "Black-Scholes needs S > 0, E > 0, sigma >= 0, tau >= 0; got S={s} E={e} sigma={sigma} tau={tau}"
        )));
    }
    let disc = (-r * tau).exp();
    let vol = sigma * tau.sqrt();
    if vol == 0.0 {
        return Ok((s - e * disc).max(0.0));
    }
    let n = Normal::standard();
    let d1 = ((s / e).ln() + (r + 0.5 * sigma * sigma) * tau) / vol;
    let d2 = d1 - vol;
    Ok(s * n.cdf(d1) - e * disc * n.cdf(d2))
}

/// Black-Scholes price of every option at every path point.
pub fn black_scholes_prices(paths: &[f64], cfg: &GbmConfig) -> Result<Vec<f64>> {
    check_paths(paths, cfg)?;
    let d = cfg.assets();
    let mut out = vec![0.0; paths.len()];
    for i in 0..cfg.paths {
        for k in 0..=cfg.steps {
            let tau = (cfg.t - cfg.time(k)).max(0.0);
            for j in 0..d {
                let at = cfg.index(i, k, j);
                out[at] = black_scholes_call(paths[at], cfg.strikes[j], cfg.r, cfg.sigma[j], tau)?;
            }
        }
    }
    Ok(out)
}

/// Mean over steps `k` of `sum_i |P_ik - B_ik| / sum_i B_ik`, where `P_ik`
/// and `B_ik` are portfolio totals over assets.
pub fn portfolio_rel_mae(pred: &[f64], bs: &[f64], paths: usize, steps: usize, assets: usize) -> Result<f64> {
    let expected = paths * (steps + 1) * assets;
    if pred.len() != expected || bs.len() != expected {
        return Err(Error::Shape {
            what: "portfolio arrays",
            expected,
            got: pred.len().min(bs.len()),
        });
    }
    let mut acc = 0.0;
    for k in 0..=steps {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..paths {
            let at = (i * (steps + 1) + k) * assets;
            let p: f64 = pred[at..at + assets].iter().sum();
            let b: f64 = bs[at..at + assets].iter().sum();
            num += (p - b).abs();
            den += b;
        }
        if !(den > 0.0) {
            return Err(Error::invalid(format!("portfolio value is zero at step {k}")));
        }
        acc += num / den;
    }
    Ok(acc / (steps + 1) as f64)
}
