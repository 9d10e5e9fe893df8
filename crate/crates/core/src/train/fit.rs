//! Mini-batch training loop with best-validation selection.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::adam::{AdamConfig, AdamState};
use super::loss::{cross_entropy_loss, mse_loss, Loss};
use super::metrics::{accuracy, argmax, gradient_variance, r2_score};
use crate::error::{Error, Result};
use crate::network::Network;

/// Samples evaluated sequentially inside one parallel task. Fixed so that
/// the floating-point summation order does not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Values(Vec<Vec<f64>>),
    Labels(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub x: Vec<Vec<f64>>,
    pub targets: Targets,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Samples {
        Samples {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            targets: match &self.targets {
                Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i].clone()).collect()),
                Targets::Labels(l) => Targets::Labels(idx.iter().map(|&i| l[i]).collect()),
            },
        }
    }

    fn loss_at(&self, i: usize, pred: &[f64], loss: Loss) -> Result<(f64, Vec<f64>)> {
        match (&self.targets, loss) {
            (Targets::Values(v), Loss::Mse) => mse_loss(pred, &v[i]),
            (Targets::Labels(l), Loss::CrossEntropy) => cross_entropy_loss(pred, l[i]),
            _ => Err(Error::Config("loss does not match the target kind".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Count(usize),
}

impl Serialize for BatchSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::Full => s.serialize_str("full"),
            BatchSize::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(0) => Err(serde::de::Error::custom("batch size must be positive")),
            Repr::Count(n) => Ok(BatchSize::Count(n)),
            Repr::Text(t) if t == "full" => Ok(BatchSize::Full),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "batch size must be a count or \"full\", got {t:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub seed: u64,
    pub loss: Loss,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.005,
            epochs: 100,
            batch_size: BatchSize::Full,
            seed: 0,
            loss: Loss::Mse,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == BatchSize::Count(0) {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// R^2 for regression, accuracy for classification.
    pub val_metric: f64,
    pub grad_variance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn grad_trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_variance).collect()
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.train_loss).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Parameters at the epoch with the lowest validation loss.
    pub params: Vec<f64>,
    pub final_params: Vec<f64>,
    pub best_epoch: usize,
    pub history: History,
}

/// Loss and gradient sums over the listed samples.
fn batch_gradient(
    net: &Network,
    params: &[f64],
    data: &Samples,
    idx: &[usize],
    loss: Loss,
) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, Vec<f64>)> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; params.len()];
            let mut total = 0.0;
            for &i in chunk {
                let (pred, cache) = net.forward(params, &data.x[i])?;
                let (l, up) = data.loss_at(i, &pred, loss)?;
                total += l;
                net.backward_into(params, cache, &up, &mut grad)?;
            }
            Ok((total, grad))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; params.len()];
    let mut total = 0.0;
    for (l, g) in parts {
        total += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((total, grad))
}

/// Noiseless predictions for every sample, in order.
pub fn predict_all(net: &Network, params: &[f64], x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    x.par_iter().map(|xi| net.predict(params, xi)).collect()
}

/// Mean loss and metric of `params` on `data`.
pub fn evaluate(net: &Network, params: &[f64], data: &Samples, loss: Loss) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let preds = predict_all(net, params, &data.x)?;
    let mut total = 0.0;
    for (i, p) in preds.iter().enumerate() {
        total += data.loss_at(i, p, loss)?.0;
    }
    let metric = match &data.targets {
        Targets::Values(v) => {
            let flat_p: Vec<f64> = preds.iter().flatten().copied().collect();
            let flat_t: Vec<f64> = v.iter().flatten().copied().collect();
            r2_score(&flat_p, &flat_t).unwrap_or(f64::NAN)
        }
        Targets::Labels(l) => {
            let labels: Vec<usize> = preds.iter().map(|p| argmax(p)).collect();
            accuracy(&labels, l)
        }
    };
    Ok((total / data.len() as f64, metric))
}

pub fn fit(
    net: &Network,
    init: Vec<f64>,
    train: &Samples,
    val: &Samples,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    fit_with(net, init, train, val, cfg, |_| {})
}

/// `fit` with a callback after every epoch.
pub fn fit_with<F: FnMut(&EpochRecord)>(
    net: &Network,
    init: Vec<f64>,
    train: &Samples,
    val: &Samples,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<FitResult> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    if init.len() != net.n_params() {
        return Err(Error::Shape {
            what: "initial parameters",
            expected: net.n_params(),
            got: init.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init;
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch = match cfg.batch_size {
        BatchSize::Full => train.len(),
        BatchSize::Count(n) => n.min(train.len()),
    };

    let mut history = History::default();
    let mut best = (f64::INFINITY, 0, params.clone());
    for epoch in 1..=cfg.epochs {
        if batch < train.len() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut grads = Vec::with_capacity(train.len().div_ceil(batch));
        for idx in order.chunks(batch) {
            let (loss_sum, mut grad) = batch_gradient(net, &params, train, idx, cfg.loss)?;
            let n = idx.len() as f64;
            grad.iter_mut().for_each(|g| *g /= n);
            epoch_loss += loss_sum;
            adam.step(&mut params, &grad, cfg.learning_rate, &cfg.adam);
            grads.push(grad);
        }
        let train_loss = epoch_loss / train.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let (val_loss, val_metric) = evaluate(net, &params, val, cfg.loss)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_metric,
            grad_variance: gradient_variance(&grads)?,
        };
        let score = if val.is_empty() { train_loss } else { val_loss };
        if score < best.0 {
            best = (score, epoch, params.clone());
        }
        on_epoch(&record);
        history.records.push(record);
    }
    Ok(FitResult {
        params: best.2,
        final_params: params,
        best_epoch: best.1,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_topology, ArchOptions, Basis, MixingRule};

    fn tiny_net() -> Network {
        let opts = ArchOptions {
            q: 2,
            hidden_layers: 1,
            depth: 2,
            mixing: MixingRule::Parallel,
            feature_basis: vec![Basis::Identity],
        };
        Network::new(parse_topology("2t1", &opts).unwrap()).unwrap()
    }

    fn xor() -> Samples {
        let pts = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let ys = [-0.5, 0.5, 0.5, -0.5];
        Samples {
            x: pts.iter().map(|p| p.iter().map(|v| v * std::f64::consts::PI).collect()).collect(),
            targets: Targets::Values(ys.iter().map(|&y| vec![y]).collect()),
        }
    }

    #[test]
    fn zero_lr_keeps_params() {
        let net = tiny_net();
        let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(1));
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 1,
            ..TrainConfig::default()
        };
        let r = fit(&net, init.clone(), &xor(), &xor(), &cfg).unwrap();
        assert_eq!(r.final_params, init);
        assert_eq!(r.history.records.len(), 1);
    }

    #[test]
    fn xor_converges() {
        let net = tiny_net();
        let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(7));
        let cfg = TrainConfig {
            learning_rate: 0.05,
            epochs: 2000,
            ..TrainConfig::default()
        };
        let data = xor();
        let r = fit(&net, init, &data, &data, &cfg).unwrap();
        let (mse, _) = evaluate(&net, &r.params, &data, Loss::Mse).unwrap();
        assert!(mse < 0.05, "mse {mse}");
    }

    #[test]
    fn deterministic_under_seed() {
        let net = tiny_net();
        let data = Samples {
            x: (0..40).map(|i| vec![0.1 * i as f64, (0.3 * i as f64).sin()]).collect(),
            targets: Targets::Values((0..40).map(|i| vec![(0.2 * i as f64).cos() * 0.5]).collect()),
        };
        let cfg = TrainConfig {
            learning_rate: 0.02,
            epochs: 5,
            batch_size: BatchSize::Count(7),
            seed: 99,
            ..TrainConfig::default()
        };
        let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(2));
        let a = fit(&net, init.clone(), &data, &data, &cfg).unwrap();
        let b = fit(&net, init, &data, &data, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.final_params, b.final_params);
    }

    #[test]
    fn classification_runs() {
        let opts = ArchOptions { q: 3, hidden_layers: 0, depth: 1, mixing: MixingRule::Parallel, feature_basis: vec![Basis::Identity] };
        let net = Network::new(parse_topology("3t3", &opts).unwrap()).unwrap();
        let data = Samples {
            x: (0..12).map(|i| vec![i as f64 * 0.2, 0.0, 1.0]).collect(),
            targets: Targets::Labels((0..12).map(|i| i % 3).collect()),
        };
        let cfg = TrainConfig { epochs: 3, loss: Loss::CrossEntropy, ..TrainConfig::default() };
        let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(0));
        let r = fit(&net, init, &data, &data, &cfg).unwrap();
        assert!((0.0..=1.0).contains(&r.history.records[2].val_metric));
        let bad = TrainConfig { loss: Loss::Mse, ..cfg };
        assert!(fit(&net, r.params, &data, &data, &bad).is_err());
    }

    #[test]
    fn batch_size_serde() {
        let full: BatchSize = serde_json::from_str("\"full\"").unwrap();
        assert_eq!(full, BatchSize::Full);
        let n: BatchSize = serde_json::from_str("64").unwrap();
        assert_eq!(n, BatchSize::Count(64));
        assert!(serde_json::from_str::<BatchSize>("\"half\"").is_err());
        assert!(serde_json::from_str::<BatchSize>("0").is_err());
    }

    #[test]
    fn history_csv() {
        let h = History {
            records: vec![EpochRecord { epoch: 1, train_loss: 0.5, val_loss: 0.4, val_metric: 0.1, grad_variance: 0.01 }],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        h.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("epoch,train_loss,val_loss,val_metric,grad_variance\n1,0.5,0.4,0.1,0.01"));
    }
}
