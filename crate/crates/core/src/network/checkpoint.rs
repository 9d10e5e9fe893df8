//! JSON checkpoints of a trained network.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{Basis, FeatureMap};
use super::mixing::MixingRule;
use super::model::Network;
use super::topology::{parse_topology, ArchOptions};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub topology: String,
    pub mixing: MixingRule,
    pub q: usize,
    pub hidden_layers: usize,
    pub depth: usize,
    pub feature_basis: Vec<Basis>,
    pub feature_map: FeatureMap,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(net: &Network, params: &[f64]) -> Self {
        let o = &net.spec.options;
        Checkpoint {
            format_version: FORMAT_VERSION,
            topology: net.spec.topology.clone(),
            mixing: o.mixing,
            q: o.q,
            hidden_layers: o.hidden_layers,
            depth: o.depth,
            feature_basis: o.feature_basis.clone(),
            feature_map: net.features.clone(),
            params: params.to_vec(),
        }
    }

    /// Rebuilds the network and checks the parameter count.
    pub fn network(&self) -> Result<Network> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                self.format_version
            )));
        }
        let opts = ArchOptions {
            q: self.q,
            hidden_layers: self.hidden_layers,
            depth: self.depth,
            mixing: self.mixing,
            feature_basis: self.feature_basis.clone(),
        };
        let net = Network::with_features(parse_topology(&self.topology, &opts)?, self.feature_map.clone())?;
        if net.n_params() != self.params.len() {
            return Err(Error::Shape {
                what: "checkpoint parameters",
                expected: net.n_params(),
                got: self.params.len(),
            });
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
