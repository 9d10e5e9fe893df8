//! Topology strings and their resolution into a concrete layer list.
//!
//! A modular topology `d0td1t...tdn` becomes:
//!
//! * an input layer of `ceil(d0/q)` blocks measuring all `q` wires,
//! * `L` hidden layers of the same shape, each preceded by the mixing rule,
//! * one unmixed reduction layer per transition `d_{s-1} -> d_s`.
//!
//! A reduction layer on `a` incoming values normally zero-pads to a multiple
//! of `q` and measures `floor(d_s / B)` wires on each of its `B` blocks. If the
//! final transition starts from at most [`MAX_WIDE_OUTPUT`] values, it
//! instead uses one block that is `a` wires wide and measures `d_out` of them.
//!
//! A single stage (`"36"`) is dimension preserving. The prefix `single`
//! (`"single8t1"`) selects a monolith: `L` stacked `d0`-qubit blocks, each
//! re-encoding all outputs of the previous one, with the last block measuring
//! `d_out` wires.

use serde::{Deserialize, Serialize};

use super::features::Basis;
use super::mixing::MixingRule;
use crate::error::{Error, Result};
use crate::qsim::BlockParams;

/// Widest single output block a final transition may collapse into.
pub const MAX_WIDE_OUTPUT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Modular,
    Monolith,
}

/// Choices that a topology string does not fix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchOptions {
    /// Block width of the input and hidden layers.
    pub q: usize,
    /// Hidden layers for modular nets; stacked blocks for monoliths.
    pub hidden_layers: usize,
    pub depth: usize,
    pub mixing: MixingRule,
    pub feature_basis: Vec<Basis>,
}

impl Default for ArchOptions {
    fn default() -> Self {
        ArchOptions {
            q: 3,
            hidden_layers: 1,
            depth: 1,
            mixing: MixingRule::FullyConnected,
            feature_basis: vec![Basis::Identity],
        }
    }
}

/// One layer of blocks, evaluated side by side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub n_blocks: usize,
    pub q: usize,
    pub n_out: usize,
    /// Values arriving at this layer before zero-padding.
    pub in_dim: usize,
    pub mix_before: bool,
}

impl LayerSpec {
    pub fn padded_dim(&self) -> usize {
        self.n_blocks * self.q
    }

    pub fn out_dim(&self) -> usize {
        self.n_blocks * self.n_out
    }

    pub fn block_params(&self, depth: usize) -> usize {
        BlockParams::len_for(self.q, depth)
    }

    pub fn params(&self, depth: usize) -> usize {
        self.n_blocks * self.block_params(depth)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub topology: String,
    pub architecture: Architecture,
    pub stage_dims: Vec<usize>,
    pub options: ArchOptions,
    pub layers: Vec<LayerSpec>,
}

fn parse_dims(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Topology(format!("malformed topology {text:?}"));
    if text.is_empty() {
        return Err(bad());
    }
    text.split('t')
        .map(|part| {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            match part.parse::<usize>() {
                Ok(0) | Err(_) => Err(bad()),
                Ok(v) => Ok(v),
            }
        })
        .collect()
}

pub fn parse_topology(text: &str, options: &ArchOptions) -> Result<NetworkSpec> {
    let text = text.trim();
    if options.depth == 0 {
        return Err(Error::Topology("depth K must be at least 1".into()));
    }
    if options.feature_basis.is_empty() {
        return Err(Error::Topology("feature basis must not be empty".into()));
    }
    let (architecture, dims) = match text.strip_prefix("single") {
        Some(rest) => (Architecture::Monolith, parse_dims(rest)?),
        None => (Architecture::Modular, parse_dims(text)?),
    };
    let layers = match architecture {
        Architecture::Monolith => monolith_layers(&dims, options)?,
        Architecture::Modular => modular_layers(&dims, options)?,
    };
    let spec = NetworkSpec {
        topology: text.to_string(),
        architecture,
        stage_dims: dims,
        options: options.clone(),
        layers,
    };
    if !spec.stage_dims[0].is_multiple_of(spec.options.feature_basis.len()) {
        return Err(Error::Topology(format!(
            "input dim {} is not a multiple of the {} feature maps",
            spec.stage_dims[0],
            spec.options.feature_basis.len()
        )));
    }
    Ok(spec)
}

fn monolith_layers(dims: &[usize], options: &ArchOptions) -> Result<Vec<LayerSpec>> {
    let (d, d_out) = match *dims {
        [d] => (d, d),
        [d, d_out] if d_out <= d => (d, d_out),
        _ => {
            return Err(Error::Topology(
                "a monolith takes `singleD` or `singleDtOUT` with OUT <= D".into(),
            ))
        }
    };
    if options.hidden_layers == 0 {
        return Err(Error::Topology("a monolith needs at least one block (L >= 1)".into()));
    }
    Ok((0..options.hidden_layers)
        .map(|l| LayerSpec {
            n_blocks: 1,
            q: d,
            n_out: if l + 1 == options.hidden_layers { d_out } else { d },
            in_dim: d,
            mix_before: false,
        })
        .collect())
}

fn modular_layers(dims: &[usize], options: &ArchOptions) -> Result<Vec<LayerSpec>> {
    let q = options.q;
    if q == 0 {
        return Err(Error::Topology("block width q must be at least 1".into()));
    }
    let d0 = dims[0];
    let b0 = d0.div_ceil(q);
    let mut layers = vec![LayerSpec {
        n_blocks: b0,
        q,
        n_out: q,
        in_dim: d0,
        mix_before: false,
    }];
    if options.hidden_layers > 0 {
        options.mixing.check(b0, q)?;
    }
    for _ in 0..options.hidden_layers {
        layers.push(LayerSpec {
            n_blocks: b0,
            q,
            n_out: q,
            in_dim: b0 * q,
            mix_before: true,
        });
    }

    let mut a = b0 * q;
    for (s, &t) in dims.iter().enumerate().skip(1) {
        let last = s + 1 == dims.len();
        if t > a {
            return Err(Error::Topology(format!(
                "stage {s} widens {a} -> {t}; reduction stages cannot grow"
            )));
        }
        let layer = if last && a <= MAX_WIDE_OUTPUT {
            LayerSpec {
                n_blocks: 1,
                q: a,
                n_out: t,
                in_dim: a,
                mix_before: false,
            }
        } else {
            let blocks = a.div_ceil(q);
            let n_out = t / blocks;
            if n_out == 0 || (last && n_out * blocks != t) {
                return Err(Error::Topology(format!(
                    "cannot reduce {a} values in {blocks} blocks of width {q} to {t}"
                )));
            }
            LayerSpec {
                n_blocks: blocks,
                q,
                n_out,
                in_dim: a,
                mix_before: false,
            }
        };
        a = layer.out_dim();
        layers.push(layer);
    }
    Ok(layers)
}

impl NetworkSpec {
    pub fn depth(&self) -> usize {
        self.options.depth
    }

    /// Largest raw feature count the topology can take, before expansion.
    pub fn input_dim(&self) -> usize {
        self.stage_dims[0] / self.options.feature_basis.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::out_dim)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.params(self.depth())).sum()
    }

    pub fn n_blocks(&self) -> usize {
        self.layers.iter().map(|l| l.n_blocks).sum()
    }

    /// Start of each layer's parameters in the flat vector.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut at = 0;
        for l in &self.layers {
            offsets.push(at);
            at += l.params(self.depth());
        }
        offsets
    }

    /// Largest block width anywhere in the network.
    pub fn max_q(&self) -> usize {
        self.layers.iter().map(|l| l.q).max().unwrap_or(0)
    }
}

/// Trainable parameter count of `topology` with `L` hidden layers and depth
/// `K`. Mixing rules and feature maps carry no parameters.
pub fn count_params(topology: &str, q: usize, hidden_layers: usize, depth: usize) -> Result<usize> {
    let options = ArchOptions {
        q,
        hidden_layers,
        depth,
        mixing: MixingRule::Parallel,
        feature_basis: vec![Basis::Identity],
    };
    Ok(parse_topology(topology, &options)?.n_params())
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::network::Network;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn flat_params_match_the_count(
            q in 1usize..5,
            d in 1usize..20,
            out in 1usize..20,
            hidden in 0usize..4,
            depth in 1usize..4,
        ) {
            let out = out.min(d);
            let topology = if out == d { d.to_string() } else { format!("{d}t{out}") };
            let opts = ArchOptions { q, hidden_layers: hidden, depth, mixing: MixingRule::Parallel, ..ArchOptions::default() };
            let spec = parse_topology(&topology, &opts);
            prop_assume!(spec.is_ok());
            let spec = spec.unwrap();
            for layer in &spec.layers {
                prop_assert!(layer.in_dim <= layer.padded_dim() && layer.padded_dim() - layer.in_dim < layer.q);
            }
            let net = Network::new(spec).unwrap();
            let flat = net.init_params(&mut ChaCha8Rng::seed_from_u64(0));
            prop_assert_eq!(flat.len(), count_params(&topology, q, hidden, depth).unwrap());
        }
    }
}
