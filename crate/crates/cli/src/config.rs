//! Experiment configuration: one TOML document plus `a.b.c=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fcvqc::data::{GbmConfig, PortfolioDefaults, Task};
use fcvqc::network::{parse_topology, ArchOptions, Basis, MixingRule, NetworkSpec};
use fcvqc::theory::MismatchConfig;
use fcvqc::train::{Loss, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Concrete,
    Wine,
    Portfolio,
    CustomCsv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub topology: String,
    pub q: usize,
    pub hidden_layers: usize,
    pub depth: usize,
    pub mixing: MixingRule,
    pub feature_basis: Vec<Basis>,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        let o = ArchOptions::default();
        ArchitectureConfig {
            topology: "8t3t1".into(),
            q: o.q,
            hidden_layers: o.hidden_layers,
            depth: o.depth,
            mixing: o.mixing,
            feature_basis: o.feature_basis,
        }
    }
}

impl ArchitectureConfig {
    pub fn options(&self) -> ArchOptions {
        ArchOptions {
            q: self.q,
            hidden_layers: self.hidden_layers,
            depth: self.depth,
            mixing: self.mixing,
            feature_basis: self.feature_basis.clone(),
        }
    }

    pub fn spec(&self) -> fcvqc::Result<NetworkSpec> {
        parse_topology(&self.topology, &self.options())
    }

    /// File-name-safe label of one grid cell.
    pub fn label(&self) -> String {
        format!("{}_q{}_{}_L{}_K{}", self.topology, self.q, self.mixing.name(), self.hidden_layers, self.depth)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Column name or index; empty selects the last column.
    pub target: String,
    /// Only read for `custom-csv`.
    pub task: Task,
    pub split: [f64; 3],
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { path: None, target: String::new(), task: Task::Regression, split: [0.7, 0.15, 0.15] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortfolioConfig {
    pub assets: usize,
    pub s0: f64,
    pub strike_range: [f64; 2],
    pub sigma_range: [f64; 2],
    pub r: f64,
    pub t: f64,
    pub steps: usize,
    pub paths: usize,
    pub val_fraction: f64,
    /// Reuse a saved scenario instead of simulating one.
    pub scenario: Option<PathBuf>,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        let d = PortfolioDefaults::default();
        PortfolioConfig {
            assets: 36,
            s0: d.s0,
            strike_range: [d.strike_range.0, d.strike_range.1],
            sigma_range: [d.sigma_range.0, d.sigma_range.1],
            r: d.r,
            t: d.t,
            steps: d.steps,
            paths: d.paths,
            val_fraction: 0.2,
            scenario: None,
        }
    }
}

impl PortfolioConfig {
    pub fn gbm(&self, seed: u64) -> GbmConfig {
        let defaults = PortfolioDefaults {
            s0: self.s0,
            strike_range: (self.strike_range[0], self.strike_range[1]),
            sigma_range: (self.sigma_range[0], self.sigma_range[1]),
            r: self.r,
            t: self.t,
            steps: self.steps,
            paths: self.paths,
        };
        GbmConfig::random_portfolio(self.assets, seed, &defaults)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseVerifyConfig {
    pub p: Vec<f64>,
    pub shots: Vec<u64>,
    /// Also run every `p` with exact readout (infinite shots).
    pub exact_readout: bool,
    pub layers: Vec<usize>,
    pub depth: usize,
    pub mixing: MixingRule,
    pub trials: usize,
}

impl Default for NoiseVerifyConfig {
    fn default() -> Self {
        NoiseVerifyConfig {
            p: vec![0.0, 0.01, 0.05],
            shots: vec![25, 100],
            exact_readout: true,
            layers: vec![1, 2, 3],
            depth: 2,
            mixing: MixingRule::FullyConnected,
            trials: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotVerifyConfig {
    pub shots: Vec<u64>,
    pub layers: usize,
    pub trials: usize,
}

impl Default for ShotVerifyConfig {
    fn default() -> Self {
        ShotVerifyConfig { shots: vec![25, 100, 400], layers: 3, trials: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfVerifyConfig {
    pub architecture: ArchitectureConfig,
    pub draws: usize,
    pub trials: usize,
    pub eps: f64,
}

impl Default for RfVerifyConfig {
    fn default() -> Self {
        RfVerifyConfig {
            architecture: ArchitectureConfig {
                topology: "15".into(),
                q: 3,
                hidden_layers: 1,
                depth: 2,
                mixing: MixingRule::SlidingWindow,
                feature_basis: vec![Basis::Identity],
            },
            draws: 20,
            trials: 5,
            eps: fcvqc::theory::PROBE_EPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionVerifyConfig {
    pub q: usize,
    pub max_depth: usize,
    pub p: Vec<f64>,
    pub wire: usize,
    pub inputs: usize,
}

impl Default for ContractionVerifyConfig {
    fn default() -> Self {
        ContractionVerifyConfig { q: 2, max_depth: 20, p: vec![0.02, 0.05], wire: 0, inputs: 8 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub noise: NoiseVerifyConfig,
    pub shots: ShotVerifyConfig,
    pub rf: RfVerifyConfig,
    pub contraction: ContractionVerifyConfig,
    pub mismatch: MismatchConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradScanConfig {
    /// Architectures to scan; empty means the top-level one.
    pub architectures: Vec<ArchitectureConfig>,
    pub layers: Vec<usize>,
    pub depths: Vec<usize>,
    /// Grid cells trained at once.
    pub jobs: usize,
}

impl Default for GradScanConfig {
    fn default() -> Self {
        GradScanConfig { architectures: Vec::new(), layers: vec![1, 3], depths: vec![1, 3], jobs: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub architecture: ArchitectureConfig,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub portfolio: PortfolioConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub grad_scan: GradScanConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Sets `path` (dot separated) inside `table`, creating tables on the way.
/// The value is read as a TOML literal, falling back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not of the form key.path=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override {assignment:?} has an empty key");
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("at least one key");
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("override {assignment:?}: {k:?} is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().context("config does not match the schema")?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text, overrides).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of the resolved config.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn tabular_task(&self) -> Option<Task> {
        match self.task {
            TaskKind::Concrete => Some(Task::Regression),
            TaskKind::Wine => Some(Task::Classification),
            TaskKind::CustomCsv => Some(self.data.task),
            TaskKind::Portfolio => None,
        }
    }

    /// Column holding the target, with per-dataset defaults.
    pub fn target_column(&self) -> &str {
        match (self.task, self.data.target.as_str()) {
            (TaskKind::Wine, "") => "quality",
            (_, t) => t,
        }
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate_training(&self) -> Result<()> {
        self.training.validate()?;
        self.architecture.spec().context("architecture")?;
        let want = match self.tabular_task() {
            Some(Task::Classification) => Loss::CrossEntropy,
            _ => Loss::Mse,
        };
        if self.training.loss != want {
            bail!("task {:?} needs training.loss = {:?}", self.task, want);
        }
        match self.task {
            TaskKind::Portfolio => self.validate_portfolio()?,
            _ => {
                let path = self.data.path.as_ref().ok_or_else(|| anyhow!("data.path is required for {:?}", self.task))?;
                if !path.is_file() {
                    bail!("dataset file {} does not exist", path.display());
                }
                let s: f64 = self.data.split.iter().sum();
                if self.data.split.iter().any(|f| !(0.0..=1.0).contains(f)) || (s - 1.0).abs() > 1e-9 {
                    bail!("data.split must be three fractions summing to 1, got {:?}", self.data.split);
                }
            }
        }
        Ok(())
    }

    pub fn validate_portfolio(&self) -> Result<()> {
        let p = &self.portfolio;
        if let Some(path) = &p.scenario {
            if !path.is_file() {
                bail!("scenario file {} does not exist", path.display());
            }
        } else {
            self.portfolio.gbm(self.seed).validate()?;
            if p.strike_range[0] > p.strike_range[1] || p.sigma_range[0] > p.sigma_range[1] || p.sigma_range[0] < 0.0 {
                bail!("portfolio ranges must be ordered with nonnegative volatility");
            }
        }
        if !(p.val_fraction > 0.0 && p.val_fraction < 1.0) {
            bail!("portfolio.val_fraction must lie in (0, 1), got {}", p.val_fraction);
        }
        Ok(())
    }

    pub fn scan_architectures(&self) -> Vec<ArchitectureConfig> {
        if self.grad_scan.architectures.is_empty() {
            vec![self.architecture.clone()]
        } else {
            self.grad_scan.architectures.clone()
        }
    }

    pub fn validate_scan(&self) -> Result<()> {
        let g = &self.grad_scan;
        if g.layers.is_empty() || g.depths.is_empty() || g.jobs == 0 {
            bail!("grad_scan needs nonempty layers and depths and jobs >= 1");
        }
        if g.depths.contains(&0) {
            bail!("grad_scan.depths must be positive");
        }
        for arch in self.scan_architectures() {
            for &l in &g.layers {
                ArchitectureConfig { hidden_layers: l, ..arch.clone() }
                    .spec()
                    .with_context(|| format!("grad_scan cell {} L={l}", arch.topology))?;
            }
        }
        let mut base = self.clone();
        base.grad_scan = GradScanConfig::default();
        base.validate_training()
    }
}
