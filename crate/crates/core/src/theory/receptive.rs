//! Finite-perturbation probes of which input blocks can reach an output block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{MixingRule, Network, NetworkSpec};

pub const PROBE_EPS: f64 = 1e-3;
pub const INFLUENCE_THRESHOLD: f64 = 1e-9;

/// Mixing sites and block count of a network whose layers all share one
/// block layout, so input and output blocks can be matched.
fn layout(spec: &NetworkSpec) -> Result<(usize, usize, usize)> {
    let first = &spec.layers[0];
    let uniform = spec
        .layers
        .iter()
        .all(|l| l.n_blocks == first.n_blocks && l.q == first.q && l.n_out == first.q);
    if !uniform || spec.input_dim() != first.n_blocks * first.q {
        return Err(Error::invalid(
            "receptive fields need a dimension-preserving network with one block layout",
        ));
    }
    let sites = spec.layers.iter().filter(|l| l.mix_before).count();
    Ok((first.n_blocks, first.q, sites))
}

fn ring_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Blocks that may influence output block `b`: `{b}` for parallel mixing
/// or no mixing sites, everything once a fully connected site exists, and
/// the ring window of radius `sites * r` for sliding windows.
pub fn theoretical_field(spec: &NetworkSpec, b: usize) -> Result<Vec<usize>> {
    let (n_blocks, q, sites) = layout(spec)?;
    let rule = spec.options.mixing;
    Ok((0..n_blocks)
        .filter(|&c| match rule {
            _ if sites == 0 => c == b,
            MixingRule::Parallel => c == b,
            MixingRule::FullyConnected => true,
            MixingRule::SlidingWindow => ring_distance(b, c, n_blocks) <= sites * rule.radius(q),
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockField {
    pub block: usize,
    pub probed: Vec<usize>,
    pub theory: Vec<usize>,
    pub contained: bool,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReceptiveFieldReport {
    pub mixing: MixingRule,
    pub mixing_sites: usize,
    pub radius: usize,
    pub fields: Vec<BlockField>,
    pub violations: usize,
    /// Largest ring distance from an output block to a probed influence.
    pub max_ring_distance: usize,
    /// No input block influenced anything: the parameters are degenerate.
    pub degenerate: bool,
}

/// Perturbs each input coordinate by `eps` around `trials` random base
/// points; `b'` joins `R(b)` once output block `b` moves by more than the
/// threshold at any of them.
pub fn probe_receptive_field<R: Rng + ?Sized>(
    net: &Network,
    params: &[f64],
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> Result<ReceptiveFieldReport> {
    let (n_blocks, q, sites) = layout(&net.spec)?;
    let mut hit = vec![vec![false; n_blocks]; n_blocks];
    for _ in 0..trials {
        let x: Vec<f64> = (0..n_blocks * q).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = net.predict(params, &x)?;
        for c in 0..n_blocks * q {
            let mut xp = x.clone();
            xp[c] += eps;
            let y = net.predict(params, &xp)?;
            for (b, row) in hit.iter_mut().enumerate() {
                let moved = (b * q..(b + 1) * q).any(|i| (y[i] - base[i]).abs() > INFLUENCE_THRESHOLD);
                row[c / q] |= moved;
            }
        }
    }
    let mut fields = Vec::with_capacity(n_blocks);
    let mut max_ring_distance = 0;
    for (b, row) in hit.iter().enumerate() {
        let probed: Vec<usize> = (0..n_blocks).filter(|&c| row[c]).collect();
        let theory = theoretical_field(&net.spec, b)?;
        for &c in &probed {
            max_ring_distance = max_ring_distance.max(ring_distance(b, c, n_blocks));
        }
        fields.push(BlockField {
            block: b,
            contained: probed.iter().all(|c| theory.contains(c)),
            equal: probed == theory,
            probed,
            theory,
        });
    }
    let rule = net.spec.options.mixing;
    Ok(ReceptiveFieldReport {
        mixing: rule,
        mixing_sites: sites,
        radius: if rule == MixingRule::SlidingWindow { rule.radius(q) } else { 0 },
        violations: fields.iter().filter(|f| !f.contained).count(),
        degenerate: fields.iter().all(|f| f.probed.is_empty()),
        max_ring_distance,
        fields,
    })
}

/// Generic parameters: uniform on `[-pi, pi)`.
pub fn generic_params(net: &Network, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    (0..net.n_params()).map(|_| rng.random_range(-pi..pi)).collect()
}
