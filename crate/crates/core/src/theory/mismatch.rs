//! Approximation error of three mixing families on a target whose parts
//! need progressively wider receptive fields.
//!
//! Four blocks of three features `x[b][i]`, one output per block:
//!
//! ```text
//! y_b = ws * 0.4 cos(x[b][0])
//!     + wl * 0.3 sin(x[b-1][1]) sin(x[b+1][2])   (ring radius 1)
//!     + wg * 0.3 sin(x[b+2][0])                  (ring radius 2)
//! ```
//!
//! The three parts are orthogonal. Parallel mixing sees only block `b`, a
//! radius-1 sliding window adds the local term, and fully connected mixing
//! sees everything. Each input block feeds every consumer through its own
//! measured wire, so no family is starved by a shared scalar channel. Fully connected
//! mixing needs as many blocks as wires, so that family runs with `q = 4`
//! blocks whose fourth wire carries a constant zero, at depth 3 instead of
//! 4 to keep the parameter budget equal (432).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{parse_topology, ArchOptions, MixingRule, Network};
use crate::train::{evaluate, fit, BatchSize, Loss, Samples, Targets, TrainConfig};

const BLOCKS: usize = 4;
const WIDTH: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetWeights {
    pub separable: f64,
    pub local: f64,
    pub global: f64,
}

impl Default for TargetWeights {
    fn default() -> Self {
        TargetWeights { separable: 1.0, local: 1.0, global: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MismatchConfig {
    pub samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: BatchSize,
    pub seeds: Vec<u64>,
    pub weights: TargetWeights,
    /// Relative slack allowed on each inequality of the chain.
    pub slack: f64,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        MismatchConfig {
            samples: 200,
            epochs: 100,
            learning_rate: 0.05,
            batch_size: BatchSize::Count(20),
            seeds: (0..5).collect(),
            weights: TargetWeights::default(),
            slack: 0.05,
        }
    }
}

/// Final training MSE of the three families for one seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriple {
    pub separable: f64,
    pub local: f64,
    pub global: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MismatchReport {
    pub config: MismatchConfig,
    pub n_params: usize,
    pub per_seed: Vec<ErrorTriple>,
    pub mean: ErrorTriple,
    pub chain_holds: bool,
}

pub fn target(x: &[f64], w: &TargetWeights) -> Vec<f64> {
    let at = |b: usize, i: usize| x[(b % BLOCKS) * WIDTH + i];
    (0..BLOCKS)
        .map(|b| {
            w.separable * 0.4 * at(b, 0).cos()
                + w.local * 0.3 * at(b + BLOCKS - 1, 1).sin() * at(b + 1, 2).sin()
                + w.global * 0.3 * at(b + 2, 0).sin()
        })
        .collect()
}

fn family(mixing: MixingRule) -> Result<Network> {
    let (topology, q, depth) = match mixing {
        MixingRule::FullyConnected => ("16t4", 4, 3),
        _ => ("12t4", 3, 4),
    };
    let opts = ArchOptions { q, hidden_layers: 1, depth, mixing, ..ArchOptions::default() };
    Network::new(parse_topology(topology, &opts)?)
}

/// Inserts a zero after every block of three features.
fn pad_blocks(x: &[f64]) -> Vec<f64> {
    x.chunks(WIDTH).flat_map(|c| c.iter().copied().chain([0.0])).collect()
}

fn train_family(mixing: MixingRule, data: &Samples, cfg: &MismatchConfig, seed: u64) -> Result<(f64, usize)> {
    let net = family(mixing)?;
    let data = if mixing == MixingRule::FullyConnected {
        Samples { x: data.x.iter().map(|x| pad_blocks(x)).collect(), targets: data.targets.clone() }
    } else {
        data.clone()
    };
    let tc = TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed,
        loss: Loss::Mse,
        ..TrainConfig::default()
    };
    let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    let empty = Samples { x: vec![], targets: Targets::Values(vec![]) };
    let result = fit(&net, init, &data, &empty, &tc)?;
    Ok((evaluate(&net, &result.params, &data, Loss::Mse)?.0, net.n_params()))
}

/// Trains the three families on identical data for every seed and checks
/// `E_sep >= E_loc >= E_glob` on the seed averages, each step allowed a
/// relative slack.
pub fn support_mismatch_experiment(cfg: &MismatchConfig) -> Result<MismatchReport> {
    if cfg.seeds.is_empty() || cfg.samples == 0 {
        return Err(Error::invalid("need at least one seed and one sample"));
    }
    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    let mut n_params = 0;
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..cfg.samples)
            .map(|_| (0..BLOCKS * WIDTH).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let y = x.iter().map(|xi| target(xi, &cfg.weights)).collect();
        let data = Samples { x, targets: Targets::Values(y) };
        let (separable, n) = train_family(MixingRule::Parallel, &data, cfg, seed)?;
        let (local, n_loc) = train_family(MixingRule::SlidingWindow, &data, cfg, seed)?;
        let (global, n_glob) = train_family(MixingRule::FullyConnected, &data, cfg, seed)?;
        debug_assert!(n == n_loc && n == n_glob);
        n_params = n;
        per_seed.push(ErrorTriple { separable, local, global });
    }
    let k = per_seed.len() as f64;
    let mean = ErrorTriple {
        separable: per_seed.iter().map(|e| e.separable).sum::<f64>() / k,
        local: per_seed.iter().map(|e| e.local).sum::<f64>() / k,
        global: per_seed.iter().map(|e| e.global).sum::<f64>() / k,
    };
    let chain_holds = mean.separable >= mean.local * (1.0 - cfg.slack) && mean.local >= mean.global * (1.0 - cfg.slack);
    Ok(MismatchReport { config: cfg.clone(), n_params, per_seed, mean, chain_holds })
}
