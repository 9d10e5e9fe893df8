//! Parameter-free block mixing. Every rule is a permutation of the `B*q`
//! layer values, so the backward pass is the inverse permutation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingRule {
    /// `out[b][i] = in[i][b]`; needs `B == q`.
    FullyConnected,
    /// `out[b][i] = in[(b - r + i) mod B][i]` with `r = (q-1)/2`; needs odd `q`.
    SlidingWindow,
    Parallel,
}

impl MixingRule {
    pub fn name(self) -> &'static str {
        match self {
            MixingRule::FullyConnected => "fully_connected",
            MixingRule::SlidingWindow => "sliding_window",
            MixingRule::Parallel => "parallel",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "fully_connected" | "fc" | "full" => Ok(MixingRule::FullyConnected),
            "sliding_window" | "sw" | "sliding" => Ok(MixingRule::SlidingWindow),
            "parallel" | "none" => Ok(MixingRule::Parallel),
            other => Err(Error::Config(format!("unknown mixing rule {other:?}"))),
        }
    }

    pub fn check(self, n_blocks: usize, q: usize) -> Result<()> {
        match self {
            MixingRule::FullyConnected if n_blocks != q => Err(Error::Topology(format!(
                "fully connected mixing needs as many blocks as wires, got B={n_blocks} q={q}"
            ))),
            MixingRule::SlidingWindow if q.is_multiple_of(2) => Err(Error::Topology(format!(
                "sliding-window mixing needs odd q, got {q}"
            ))),
            _ => Ok(()),
        }
    }

    /// Window radius `r = (q-1)/2`; zero for the other rules.
    pub fn radius(self, q: usize) -> usize {
        match self {
            MixingRule::SlidingWindow => (q - 1) / 2,
            _ => 0,
        }
    }

    /// `source[dst]`: flat index feeding output slot `dst`.
    pub fn permutation(self, n_blocks: usize, q: usize) -> Result<Vec<usize>> {
        self.check(n_blocks, q)?;
        let r = self.radius(q) as isize;
        Ok((0..n_blocks * q)
            .map(|dst| {
                let (b, i) = (dst / q, dst % q);
                match self {
                    MixingRule::FullyConnected => i * q + b,
                    MixingRule::SlidingWindow => {
                        let src = (b as isize - r + i as isize).rem_euclid(n_blocks as isize);
                        src as usize * q + i
                    }
                    MixingRule::Parallel => dst,
                }
            })
            .collect())
    }
}

/// Applies a source permutation: `out[dst] = x[perm[dst]]`.
pub fn permute(x: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&src| x[src]).collect()
}

/// Transpose of `permute`: routes gradients back to their sources.
pub fn permute_back(g: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for (dst, &src) in perm.iter().enumerate() {
        out[src] = g[dst];
    }
    out
}

/// Mixes a `B x q` block matrix given row-major.
pub fn mix(x: &[f64], n_blocks: usize, q: usize, rule: MixingRule) -> Result<Vec<f64>> {
    if x.len() != n_blocks * q {
        return Err(Error::Shape {
            what: "mixing input",
            expected: n_blocks * q,
            got: x.len(),
        });
    }
    Ok(permute(x, &rule.permutation(n_blocks, q)?))
}
