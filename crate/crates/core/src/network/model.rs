//! Full forward and backward passes through a resolved network.
//!
//! Parameters live in one flat vector: layers in order, blocks in order
//! inside a layer, each block laid out like `BlockParams::angles`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use super::mixing::{permute, permute_back};
use super::topology::{NetworkSpec, LayerSpec};
use crate::error::{Error, Result};
use crate::qsim::ansatz::{encode, evolve};
use crate::qsim::gradient::adjoint_into;
use crate::qsim::{block_forward_noisy, BlockParams, NoiseConfig, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: NetworkSpec,
    pub features: FeatureMap,
    #[serde(skip)]
    perms: Vec<Option<Vec<usize>>>,
}

/// Everything `backward` needs from one `forward`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    fingerprint: u64,
    layers: Vec<LayerCache>,
}

#[derive(Clone, Debug)]
pub struct LayerCache {
    /// Post-mixing, zero-padded block inputs (`B*q` values).
    pub inputs: Vec<f64>,
    /// Final pre-readout state of each block.
    pub states: Vec<StateVector>,
}

fn fingerprint(params: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    params.len().hash(&mut h);
    for p in params {
        p.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Splits `x` into `ceil(len/q)` blocks of width `q`, zero-padding the last.
pub fn partition(x: &[f64], q: usize) -> Vec<Vec<f64>> {
    assert!(q >= 1, "block width must be positive");
    x.chunks(q)
        .map(|c| {
            let mut b = c.to_vec();
            b.resize(q, 0.0);
            b
        })
        .collect()
}

impl Network {
    /// A network without feature preprocessing beyond plain expansion.
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let features = FeatureMap::identity(spec.options.feature_basis.clone(), spec.input_dim());
        Self::with_features(spec, features)
    }

    /// The leading topology number is a capacity: a feature map yielding
    /// fewer values is zero-padded up to it (11 wine features fill `12t8t6`).
    pub fn with_features(spec: NetworkSpec, features: FeatureMap) -> Result<Self> {
        if features.output_dim() > spec.stage_dims[0]
            || features.output_dim() == 0
            || features.basis != spec.options.feature_basis
        {
            return Err(Error::Topology(format!(
                "feature map yields {} values but the topology starts at {}",
                features.output_dim(),
                spec.stage_dims[0]
            )));
        }
        let mut net = Network {
            spec,
            features,
            perms: Vec::new(),
        };
        net.build_perms()?;
        Ok(net)
    }

    fn build_perms(&mut self) -> Result<()> {
        self.perms = self
            .spec
            .layers
            .iter()
            .map(|l| {
                l.mix_before
                    .then(|| self.spec.options.mixing.permutation(l.n_blocks, l.q))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Restores derived state after deserialization.
    pub fn rebuild(mut self) -> Result<Self> {
        self.build_perms()?;
        Ok(self)
    }

    pub fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    /// Raw features expected per sample.
    pub fn input_dim(&self) -> usize {
        self.features.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.spec.layers
    }

    /// Parameter range of block `block` in layer `layer`.
    pub fn block_range(&self, layer: usize, block: usize) -> Range<usize> {
        let depth = self.spec.depth();
        let offset: usize = self.spec.layers[..layer].iter().map(|l| l.params(depth)).sum();
        let len = self.spec.layers[layer].block_params(depth);
        offset + block * len..offset + (block + 1) * len
    }

    /// Angles drawn i.i.d. from U[0, 2pi).
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n_params()).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect()
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape {
                what: "network parameters",
                expected: self.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Input after feature expansion, before partitioning.
    pub fn prepare_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                what: "network input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut v = if self.features.is_trivial() { x.to_vec() } else { self.features.apply(x)? };
        v.resize(self.spec.stage_dims[0], 0.0);
        Ok(v)
    }

    /// Mixed and zero-padded inputs of layer `l` given the previous values.
    fn layer_inputs(&self, l: usize, values: &[f64]) -> Vec<f64> {
        let spec = &self.spec.layers[l];
        debug_assert_eq!(values.len(), spec.in_dim);
        let mut v = match &self.perms[l] {
            Some(perm) => permute(values, perm),
            None => values.to_vec(),
        };
        v.resize(spec.padded_dim(), 0.0);
        v
    }

    /// Runs the network with a custom block evaluator and returns every
    /// layer's output. The evaluator sees `(features, angles, depth, n_out)`.
    pub fn forward_with<F>(&self, params: &[f64], x: &[f64], mut eval: F) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(&[f64], &[f64], usize, usize) -> Result<Vec<f64>>,
    {
        self.check_params(params)?;
        let depth = self.spec.depth();
        let mut values = self.prepare_input(x)?;
        let mut trace = Vec::with_capacity(self.spec.layers.len());
        let mut offset = 0;
        for (l, spec) in self.spec.layers.iter().enumerate() {
            let inputs = self.layer_inputs(l, &values);
            let per_block = spec.block_params(depth);
            let mut out = Vec::with_capacity(spec.out_dim());
            for b in 0..spec.n_blocks {
                let angles = &params[offset + b * per_block..offset + (b + 1) * per_block];
                out.extend(eval(&inputs[b * spec.q..(b + 1) * spec.q], angles, depth, spec.n_out)?);
            }
            offset += spec.params(depth);
            trace.push(out.clone());
            values = out;
        }
        Ok(trace)
    }

    /// Noiseless output without keeping a cache.
    pub fn predict(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_with(params, x, |h, angles, depth, n_out| {
            let mut s = encode(h)?;
            evolve(&mut s, angles, depth);
            Ok(s.leading_z(n_out))
        })?;
        Ok(trace.pop().unwrap_or_default())
    }

    /// Output under depolarizing noise and finite shots at every block.
    pub fn predict_noisy<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        x: &[f64],
        noise: &NoiseConfig,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut trace = self.forward_with(params, x, |h, angles, depth, n_out| {
            let block = BlockParams::new(h.len(), depth, angles.to_vec())?;
            block_forward_noisy(h, &block, n_out, noise, rng)
        })?;
        Ok(trace.pop().unwrap_or_default())
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_params(params)?;
        let depth = self.spec.depth();
        let mut values = self.prepare_input(x)?;
        let mut layers = Vec::with_capacity(self.spec.layers.len());
        let mut offset = 0;
        for (l, spec) in self.spec.layers.iter().enumerate() {
            let inputs = self.layer_inputs(l, &values);
            let per_block = spec.block_params(depth);
            let mut out = Vec::with_capacity(spec.out_dim());
            let mut states = Vec::with_capacity(spec.n_blocks);
            for b in 0..spec.n_blocks {
                let angles = &params[offset + b * per_block..offset + (b + 1) * per_block];
                let mut s = encode(&inputs[b * spec.q..(b + 1) * spec.q])?;
                evolve(&mut s, angles, depth);
                out.extend(s.leading_z(spec.n_out));
                states.push(s);
            }
            offset += spec.params(depth);
            layers.push(LayerCache { inputs, states });
            values = out;
        }
        Ok((
            values,
            ForwardCache {
                fingerprint: fingerprint(params),
                layers,
            },
        ))
    }

    /// Gradient of `upstream . output` with respect to the parameters.
    pub fn backward(&self, params: &[f64], cache: ForwardCache, upstream: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.n_params()];
        self.backward_into(params, cache, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Like `backward`, accumulating into `grad`.
    pub fn backward_into(
        &self,
        params: &[f64],
        cache: ForwardCache,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_params(params)?;
        if grad.len() != params.len() {
            return Err(Error::Shape {
                what: "gradient buffer",
                expected: params.len(),
                got: grad.len(),
            });
        }
        if cache.fingerprint != fingerprint(params) || cache.layers.len() != self.spec.layers.len() {
            return Err(Error::StaleCache(
                "cache was produced with different parameters".into(),
            ));
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                what: "upstream gradient",
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let depth = self.spec.depth();
        let offsets = self.spec.layer_offsets();
        let mut g = upstream.to_vec();
        for (l, lc) in cache.layers.into_iter().enumerate().rev() {
            let spec = &self.spec.layers[l];
            let per_block = spec.block_params(depth);
            let mut d_in = vec![0.0; spec.padded_dim()];
            for (b, state) in lc.states.into_iter().enumerate() {
                let up = &g[b * spec.n_out..(b + 1) * spec.n_out];
                if up.iter().all(|&u| u == 0.0) {
                    continue;
                }
                let range = offsets[l] + b * per_block..offsets[l] + (b + 1) * per_block;
                adjoint_into(
                    &lc.inputs[b * spec.q..(b + 1) * spec.q],
                    &params[range.clone()],
                    depth,
                    up,
                    state,
                    &mut grad[range],
                    &mut d_in[b * spec.q..(b + 1) * spec.q],
                );
            }
            if l == 0 {
                break;
            }
            d_in.truncate(spec.in_dim);
            g = match &self.perms[l] {
                Some(perm) => permute_back(&d_in, perm),
                None => d_in,
            };
        }
        Ok(())
    }
}
