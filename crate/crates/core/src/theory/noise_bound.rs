//! Propagation of per-layer noise bias and shot noise through a modular net.
//!
//! Noise enters at every layer through the depolarized block readout (exact,
//! via the density matrix) followed by optional shot sampling. Mixing maps
//! are permutations, so every `||W||_2` in the bound equals 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_and_se, write_rows};
use crate::error::{Error, Result};
use crate::network::{ArchOptions, MixingRule, Network, NetworkSpec, parse_topology};
use crate::qsim::{block_forward, block_forward_density, sample_shots, BlockParams};
use std::path::Path;

/// `sum_l (prod_{j>l} ||W_j||) (B_l + sqrt(d_l / S_l))` with unit mixing
/// norms; `None` shots means exact readout.
pub fn noise_bound_rhs(spec: &NetworkSpec, bias: &[f64], shots: &[Option<u64>]) -> Result<f64> {
    let n = spec.layers.len();
    if bias.len() != n || shots.len() != n {
        return Err(Error::Shape {
            what: "per-layer bias and shot lists",
            expected: n,
            got: bias.len().min(shots.len()),
        });
    }
    let mut total = 0.0;
    for ((layer, b), s) in spec.layers.iter().zip(bias).zip(shots) {
        if !(*b >= 0.0) {
            return Err(Error::invalid(format!("bias bound must be nonnegative, got {b}")));
        }
        let shot_term = match s {
            Some(0) => return Err(Error::invalid("shot count must be positive")),
            Some(s) => (layer.out_dim() as f64 / *s as f64).sqrt(),
            None => 0.0,
        };
        total += b + shot_term;
    }
    Ok(total)
}

/// The dimension-preserving `9`-wide, `q = 3` network with `layers` noisy
/// readouts (`layers - 1` mixing sites).
pub fn theorem_network(layers: usize, depth: usize, mixing: MixingRule) -> Result<Network> {
    if layers == 0 {
        return Err(Error::invalid("need at least one layer"));
    }
    let opts = ArchOptions {
        q: 3,
        hidden_layers: layers - 1,
        depth,
        mixing,
        ..ArchOptions::default()
    };
    Network::new(parse_topology("9", &opts)?)
}

/// One pass of the noisy recursion.
struct NoisyPass {
    output: Vec<f64>,
    /// `||E[noisy readout] - ideal readout||_2` per layer, at this pass's inputs.
    bias: Vec<f64>,
    /// `||sampled - E[noisy readout]||_2` per layer.
    shot: Vec<f64>,
}

/// Evaluates every block at its actual input. With `propagate` the sampled
/// noisy readout feeds the next layer; otherwise the ideal one does.
fn noisy_pass<R: Rng>(
    net: &Network,
    params: &[f64],
    x: &[f64],
    p: f64,
    shots: Option<u64>,
    propagate: bool,
    rng: &mut R,
) -> Result<NoisyPass> {
    let layers = net.layers();
    let mut layer_of = Vec::new();
    for (l, spec) in layers.iter().enumerate() {
        layer_of.extend(std::iter::repeat_n(l, spec.n_blocks));
    }
    let mut bias_sq = vec![0.0; layers.len()];
    let mut shot_sq = vec![0.0; layers.len()];
    let mut block = 0;
    let trace = net.forward_with(params, x, |features, angles, depth, n_out| {
        let l = layer_of[block];
        block += 1;
        let bp = BlockParams::new(features.len(), depth, angles.to_vec())?;
        let ideal = block_forward(features, &bp, n_out)?;
        let mean = if p > 0.0 {
            block_forward_density(features, &bp, n_out, p)?
        } else {
            ideal.clone()
        };
        bias_sq[l] += mean.iter().zip(&ideal).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut sampled = mean.clone();
        if let Some(s) = shots {
            sample_shots(&mut sampled, s, rng);
        }
        shot_sq[l] += sampled.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        Ok(if propagate { sampled } else { ideal })
    })?;
    Ok(NoisyPass {
        output: trace.last().cloned().unwrap_or_default(),
        bias: bias_sq.into_iter().map(f64::sqrt).collect(),
        shot: shot_sq.into_iter().map(f64::sqrt).collect(),
    })
}

/// Per-layer `B_l`: the largest bias norm over `inputs`, each layer seeing
/// the ideal activations of the previous one. A sample max, so it can only
/// under-estimate the true supremum.
pub fn estimate_bias(net: &Network, params: &[f64], inputs: &[Vec<f64>], p: f64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut best = vec![0.0f64; net.layers().len()];
    for x in inputs {
        let pass = noisy_pass(net, params, x, p, None, false, &mut rng)?;
        for (b, v) in best.iter_mut().zip(pass.bias) {
            *b = b.max(v);
        }
    }
    Ok(best)
}

fn sample_inputs(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let pi = std::f64::consts::PI;
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-pi..pi)).collect()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseGrid {
    pub p: Vec<f64>,
    /// `None` is the exact-readout limit.
    pub shots: Vec<Option<u64>>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for NoiseGrid {
    fn default() -> Self {
        NoiseGrid {
            p: vec![0.0, 0.01, 0.05],
            shots: vec![Some(25), Some(100), None],
            trials: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseBoundPoint {
    pub layers: usize,
    pub p: f64,
    pub shots: Option<u64>,
    pub bias: Vec<f64>,
    pub shot_terms: Vec<f64>,
    pub mixing_norms: Vec<f64>,
    pub rhs: f64,
    pub empirical_mean: f64,
    pub empirical_se: f64,
    pub pass: bool,
    #[serde(skip)]
    pub deviations: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseBoundReport {
    pub points: Vec<NoiseBoundPoint>,
    pub passed: bool,
}

impl NoiseBoundReport {
    pub fn merge(reports: Vec<NoiseBoundReport>) -> NoiseBoundReport {
        let points: Vec<_> = reports.into_iter().flat_map(|r| r.points).collect();
        NoiseBoundReport { passed: points.iter().all(|p| p.pass), points }
    }

    /// One row per trial: grid coordinates and the observed deviation.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.points.iter().flat_map(|pt| {
            pt.deviations.iter().enumerate().map(move |(t, d)| {
                vec![
                    pt.layers.to_string(),
                    pt.p.to_string(),
                    pt.shots.map_or("inf".into(), |s| s.to_string()),
                    t.to_string(),
                    d.to_string(),
                ]
            })
        });
        write_rows(path, &["layers", "p", "shots", "trial", "deviation"], rows)
    }
}

/// Runs ideal and noisy recursions on `grid.trials` shared inputs for every
/// `(p, S)` point. `B_l` is the max bias seen on the noisy run's own inputs,
/// so both sides of the inequality use the same sample.
pub fn verify_noise_bound(net: &Network, params: &[f64], grid: &NoiseGrid) -> Result<NoiseBoundReport> {
    if net.spec.options.mixing == MixingRule::SlidingWindow && net.spec.options.q.is_multiple_of(2) {
        return Err(Error::invalid("mixing must be a permutation"));
    }
    let inputs = sample_inputs(net.input_dim(), grid.trials, grid.seed);
    let ideal: Vec<Vec<f64>> = inputs.iter().map(|x| net.predict(params, x)).collect::<Result<_>>()?;
    let n_layers = net.layers().len();
    let mut points = Vec::new();
    for &p in &grid.p {
        for &shots in &grid.shots {
            let passes: Vec<NoisyPass> = (0..grid.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
                    rng.set_stream(t as u64);
                    noisy_pass(net, params, &inputs[t], p, shots, true, &mut rng)
                })
                .collect::<Result<_>>()?;
            let deviations: Vec<f64> = passes
                .iter()
                .zip(&ideal)
                .map(|(pass, h)| pass.output.iter().zip(h).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .collect();
            let mut bias = vec![0.0f64; n_layers];
            for pass in &passes {
                for (b, v) in bias.iter_mut().zip(&pass.bias) {
                    *b = b.max(*v);
                }
            }
            let shot_list = vec![shots; n_layers];
            let rhs = noise_bound_rhs(&net.spec, &bias, &shot_list)?;
            let (mean, se) = mean_and_se(&deviations);
            points.push(NoiseBoundPoint {
                layers: n_layers,
                p,
                shots,
                shot_terms: net
                    .layers()
                    .iter()
                    .map(|l| shots.map_or(0.0, |s| (l.out_dim() as f64 / s as f64).sqrt()))
                    .collect(),
                mixing_norms: vec![1.0; n_layers],
                bias,
                rhs,
                empirical_mean: mean,
                empirical_se: se,
                pass: mean <= rhs,
                deviations,
            });
        }
    }
    Ok(NoiseBoundReport { passed: points.iter().all(|p| p.pass), points })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShotNoisePoint {
    pub shots: u64,
    /// Mean over trials of `||xi_l||_2`, per layer.
    pub mean_norm: Vec<f64>,
    pub bound: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShotNoiseReport {
    pub trials: usize,
    pub points: Vec<ShotNoisePoint>,
    pub passed: bool,
}

impl ShotNoiseReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.points.iter().flat_map(|pt| {
            pt.mean_norm.iter().zip(&pt.bound).enumerate().map(move |(l, (m, b))| {
                vec![pt.shots.to_string(), l.to_string(), m.to_string(), b.to_string()]
            })
        });
        write_rows(path, &["shots", "layer", "mean_norm", "bound"], rows)
    }
}

/// Noise-free readout with `S` shots: the per-layer estimation error must
/// satisfy `E||xi||_2 <= sqrt(d/S)`.
pub fn verify_shot_noise(
    net: &Network,
    params: &[f64],
    shots: &[u64],
    trials: usize,
    seed: u64,
) -> Result<ShotNoiseReport> {
    let inputs = sample_inputs(net.input_dim(), trials, seed);
    let n_layers = net.layers().len();
    let mut points = Vec::new();
    for &s in shots {
        let norms: Vec<Vec<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ s);
                rng.set_stream(t as u64);
                noisy_pass(net, params, &inputs[t], 0.0, Some(s), true, &mut rng).map(|p| p.shot)
            })
            .collect::<Result<_>>()?;
        let mean_norm: Vec<f64> = (0..n_layers)
            .map(|l| norms.iter().map(|n| n[l]).sum::<f64>() / trials as f64)
            .collect();
        let bound: Vec<f64> = net.layers().iter().map(|l| (l.out_dim() as f64 / s as f64).sqrt()).collect();
        let pass = mean_norm.iter().zip(&bound).all(|(m, b)| m <= b);
        points.push(ShotNoisePoint { shots: s, mean_norm, bound, pass });
    }
    Ok(ShotNoiseReport { trials, passed: points.iter().all(|p| p.pass), points })
}
