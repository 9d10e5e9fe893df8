//! Option-portfolio scenarios: simulated paths, payoff labels and analytic
//! references, plus their conversion to training samples.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gbm::{black_scholes_prices, payoff_labels, simulate_gbm, GbmConfig};
use super::tabular::{split_indices, TargetScaler};
use crate::error::{Error, Result};
use crate::train::{Samples, Targets};

/// Persisted scenario. The three arrays share the flat `[path][step][asset]`
/// layout of [`GbmConfig::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioScenario {
    pub config: GbmConfig,
    pub paths: Vec<f64>,
    pub labels: Vec<f64>,
    pub bs_prices: Vec<f64>,
}

impl PortfolioScenario {
    pub fn generate(config: GbmConfig) -> Result<Self> {
        let paths = simulate_gbm(&config)?;
        let labels = payoff_labels(&paths, &config)?;
        let bs_prices = black_scholes_prices(&paths, &config)?;
        Ok(PortfolioScenario { config, paths, labels, bs_prices })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.config.paths * (self.config.steps + 1) * self.config.assets();
        for (what, v) in [("paths", &self.paths), ("labels", &self.labels), ("bs_prices", &self.bs_prices)] {
            if v.len() != n {
                return Err(Error::Shape { what: "scenario array", expected: n, got: v.len() })
                    .map_err(|e| Error::invalid(format!("{what}: {e}")));
            }
        }
        if self.paths.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("scenario prices must be positive"));
        }
        if self.labels.iter().chain(&self.bs_prices).any(|&x| !(x >= 0.0)) {
            return Err(Error::invalid("scenario labels and prices must be nonnegative"));
        }
        let c = &self.config;
        for (at, (&x, &v)) in self.paths.iter().zip(&self.bs_prices).enumerate() {
            let (k, j) = ((at / c.assets()) % (c.steps + 1), at % c.assets());
            let intrinsic = (x - c.strikes[j] * (-c.r * (c.t - c.time(k))).exp()).max(0.0);
            // Relative slack for cancellation in deep in-the-money prices.
            if v < intrinsic - 1e-9 * x.max(1.0) {
                return Err(Error::invalid(format!("price {v} below discounted intrinsic value {intrinsic}")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: PortfolioScenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    /// Prices of path `i` at step `k`, divided by each asset's spot.
    pub fn normalized_prices(&self, i: usize, k: usize) -> Vec<f64> {
        let c = &self.config;
        let at = c.index(i, k, 0);
        self.paths[at..at + c.assets()].iter().zip(&c.s0).map(|(x, s)| x / s).collect()
    }

    fn row<'a>(&self, v: &'a [f64], i: usize, k: usize) -> &'a [f64] {
        let at = self.config.index(i, k, 0);
        &v[at..at + self.config.assets()]
    }
}

/// Path-level train/validation split with model-ready samples. Every time
/// step of a path lands in the same part.
#[derive(Clone, Debug)]
pub struct PortfolioData {
    pub train_paths: Vec<usize>,
    pub val_paths: Vec<usize>,
    pub target_scaler: TargetScaler,
    pub train: Samples,
    pub val: Samples,
}

impl PortfolioData {
    /// Model outputs for `val` on the price scale, flattened in the scenario
    /// layout restricted to `val_paths`.
    pub fn unscale(&self, outputs: &[Vec<f64>]) -> Vec<f64> {
        outputs.iter().flat_map(|y| self.target_scaler.invert(y)).collect()
    }
}

/// Holds out `val_fraction` of the paths. Targets are discounted payoffs for
/// training and Black-Scholes prices for validation, both scaled by a map
/// fitted on the training payoffs.
pub fn portfolio_samples(s: &PortfolioScenario, val_fraction: f64, seed: u64) -> Result<PortfolioData> {
    let split = split_indices(s.config.paths, (1.0 - val_fraction, val_fraction, 0.0), seed)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::invalid("portfolio split leaves an empty part"));
    }
    let steps = s.config.steps;
    let rows = |paths: &[usize], v: &[f64]| -> Vec<Vec<f64>> {
        paths
            .iter()
            .flat_map(|&i| (0..=steps).map(move |k| (i, k)))
            .map(|(i, k)| s.row(v, i, k).to_vec())
            .collect()
    };
    let inputs = |paths: &[usize]| -> Vec<Vec<f64>> {
        paths
            .iter()
            .flat_map(|&i| (0..=steps).map(move |k| s.normalized_prices(i, k)))
            .collect()
    };
    let train_y = rows(&split.train, &s.labels);
    let target_scaler = TargetScaler::fit(&train_y);
    let train = Samples {
        x: inputs(&split.train),
        targets: Targets::Values(train_y.iter().map(|y| target_scaler.apply(y)).collect()),
    };
    let val = Samples {
        x: inputs(&split.val),
        targets: Targets::Values(rows(&split.val, &s.bs_prices).iter().map(|y| target_scaler.apply(y)).collect()),
    };
    Ok(PortfolioData {
        train_paths: split.train,
        val_paths: split.val,
        target_scaler,
        train,
        val,
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn generated_scenarios_respect_price_bounds(
            sigma in prop::collection::vec(0.0f64..0.8, 1..4),
            strike in 40.0f64..160.0,
            r in 0.0f64..0.1,
            steps in 1usize..6,
            seed in any::<u64>(),
        ) {
            let d = sigma.len();
            let config = GbmConfig {
                s0: vec![100.0; d],
                strikes: vec![strike; d],
                sigma,
                r,
                t: 1.0,
                steps,
                paths: 20,
                seed,
            };
            let s = PortfolioScenario::generate(config).unwrap();
            prop_assert!(s.validate().is_ok(), "{:?}", s.validate());
        }
    }
}
