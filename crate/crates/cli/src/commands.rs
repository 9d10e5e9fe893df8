//! Subcommand implementations. Each returns a `Failure` that carries the
//! process exit code.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use fcvqc::data::{load_csv, portfolio_rel_mae, portfolio_samples, prepare, PortfolioScenario, Task, TargetScaler};
use fcvqc::network::{count_params, Checkpoint, FeatureMap, Network};
use fcvqc::theory::{
    deep_contraction_experiment, generic_params, probe_receptive_field, support_mismatch_experiment, theorem_network,
    verify_noise_bound, verify_shot_noise, NoiseBoundReport, NoiseGrid,
};
use fcvqc::train::{evaluate, fit, predict_all, FitResult, Samples};

use crate::config::{ArchitectureConfig, ExperimentConfig, TaskKind};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e:#}"),
            Failure::Runtime(e) => write!(f, "error: {e:#}"),
            Failure::Verification(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn config<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> Outcome<T> {
    r.map_err(|e| Failure::Config(e.into()))
}

fn runtime<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> Outcome<T> {
    r.map_err(|e| Failure::Runtime(e.into()))
}

/// `<output_dir>/<config hash>-<unix seconds>`, plus the resolved config
/// and a provenance block.
fn open_run_dir(cfg: &ExperimentConfig, command: &str) -> Outcome<PathBuf> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let base = cfg.output_dir.join(format!("{}-{now}", cfg.hash()));
    let mut dir = base.clone();
    let mut n = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}.{n}", base.display()));
        n += 1;
    }
    runtime(std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display())))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;
    write_json(&dir.join("provenance.json"), &json!({
        "command": command,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "created_unix": now,
    }))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    runtime(std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    let text = runtime(serde_json::to_string_pretty(value))?;
    write_text(path, &(text + "\n"))
}

/// Train/validation/test samples for one task, ready for a network.
struct TaskData {
    train: Samples,
    val: Samples,
    test: Option<Samples>,
    task: Option<Task>,
    portfolio: Option<(PortfolioScenario, Vec<usize>, TargetScaler)>,
}

fn load_task(cfg: &ExperimentConfig) -> Outcome<TaskData> {
    if cfg.task == TaskKind::Portfolio {
        let scenario = match &cfg.portfolio.scenario {
            Some(path) => runtime(PortfolioScenario::load(path).with_context(|| format!("loading {}", path.display())))?,
            None => runtime(PortfolioScenario::generate(cfg.portfolio.gbm(cfg.seed)))?,
        };
        let data = runtime(portfolio_samples(&scenario, cfg.portfolio.val_fraction, cfg.seed))?;
        return Ok(TaskData {
            train: data.train,
            val: data.val,
            test: None,
            task: None,
            portfolio: Some((scenario, data.val_paths, data.target_scaler)),
        });
    }
    let path = cfg.data.path.as_ref().ok_or_else(|| Failure::Config(anyhow!("data.path is required")))?;
    let task = cfg.tabular_task().expect("tabular task");
    let dataset = runtime(load_csv(path, cfg.target_column(), task))?;
    let [a, b, c] = cfg.data.split;
    let prepared = runtime(prepare(&dataset, (a, b, c), cfg.seed))?;
    Ok(TaskData { train: prepared.train, val: prepared.val, test: Some(prepared.test), task: Some(task), portfolio: None })
}

/// Builds the network for `arch`, fitting any feature expansion on the
/// training inputs.
fn build_network(arch: &ArchitectureConfig, train: &Samples) -> Outcome<Network> {
    let spec = config(arch.spec())?;
    let dim = train.x.first().map_or(0, Vec::len);
    if dim == 0 || dim > spec.input_dim() {
        return Err(Failure::Config(anyhow!(
            "topology {} takes at most {} raw inputs but the data has {dim}",
            arch.topology,
            spec.input_dim()
        )));
    }
    let features = runtime(FeatureMap::fit(arch.feature_basis.clone(), &train.x))?;
    config(Network::with_features(spec, features))
}

fn train_net(cfg: &ExperimentConfig, net: &Network, data: &TaskData) -> Outcome<FitResult> {
    let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    runtime(fit(net, init, &data.train, &data.val, &cfg.training))
}

fn metric_name(task: Option<Task>) -> &'static str {
    match task {
        Some(Task::Classification) => "accuracy",
        Some(Task::Regression) => "r2",
        None => "r2_scaled",
    }
}

/// Trains one configuration and writes history, checkpoint and summary.
pub fn train(cfg: &ExperimentConfig) -> Outcome<PathBuf> {
    config(cfg.validate_training())?;
    let data = load_task(cfg)?;
    let net = build_network(&cfg.architecture, &data.train)?;
    let result = train_net(cfg, &net, &data)?;
    let dir = open_run_dir(cfg, "train")?;
    runtime(result.history.write_csv(&dir.join("history.csv")))?;
    runtime(Checkpoint::new(&net, &result.params).save(&dir.join("checkpoint.json")))?;

    let loss = cfg.training.loss;
    let metric = metric_name(data.task);
    let mut summary = serde_json::Map::new();
    summary.insert("task".into(), json!(cfg.task));
    summary.insert("topology".into(), json!(cfg.architecture.topology));
    summary.insert("n_params".into(), json!(net.n_params()));
    summary.insert("best_epoch".into(), json!(result.best_epoch));
    for (name, part) in [("train", Some(&data.train)), ("val", Some(&data.val)), ("test", data.test.as_ref())] {
        if let Some(part) = part {
            let (l, m) = runtime(evaluate(&net, &result.params, part, loss))?;
            summary.insert(format!("{name}_loss"), json!(l));
            summary.insert(format!("{name}_{metric}"), json!(m));
        }
    }
    if let Some((scenario, val_paths, scaler)) = &data.portfolio {
        let outputs = runtime(predict_all(&net, &result.params, &data.val.x))?;
        let pred: Vec<f64> = outputs.iter().flat_map(|y| scaler.invert(y)).collect();
        let c = &scenario.config;
        let span = (c.steps + 1) * c.assets();
        let bs: Vec<f64> = val_paths
            .iter()
            .flat_map(|&i| scenario.bs_prices[c.index(i, 0, 0)..c.index(i, 0, 0) + span].iter().copied())
            .collect();
        let rel = runtime(portfolio_rel_mae(&pred, &bs, val_paths.len(), c.steps, c.assets()))?;
        summary.insert("val_rel_mae".into(), json!(rel));
    }
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(dir)
}

/// Simulates a scenario and writes it, with its provenance, to `out` or a
/// fresh run directory.
pub fn gen_portfolio(cfg: &ExperimentConfig, out: Option<&Path>) -> Outcome<PathBuf> {
    let gbm = cfg.portfolio.gbm(cfg.seed);
    config(gbm.validate())?;
    let scenario = runtime(PortfolioScenario::generate(gbm))?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => open_run_dir(cfg, "gen-portfolio")?.join("scenario.json"),
    };
    runtime(scenario.save(&path))?;
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Noise,
    Shots,
    Rf,
    Contraction,
    Mismatch,
}

/// Runs one theorem check, writes `report.json` and `raw.csv`, and fails
/// with the verification exit code if any bound is violated.
pub fn verify(cfg: &ExperimentConfig, check: Check) -> Outcome<PathBuf> {
    let v = &cfg.verify;
    let seed = cfg.seed;
    let dir = open_run_dir(cfg, &format!("verify {check:?}").to_lowercase())?;
    let report_path = dir.join("report.json");
    let raw = dir.join("raw.csv");
    let passed = match check {
        Check::Noise => {
            let mut shots: Vec<Option<u64>> = v.noise.shots.iter().map(|&s| Some(s)).collect();
            if v.noise.exact_readout {
                shots.push(None);
            }
            let grid = NoiseGrid { p: v.noise.p.clone(), shots, trials: v.noise.trials, seed };
            let mut reports = Vec::new();
            for &layers in &v.noise.layers {
                let net = config(theorem_network(layers, v.noise.depth, v.noise.mixing))?;
                let params = net.init_params(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(layers as u64)));
                reports.push(runtime(verify_noise_bound(&net, &params, &grid))?);
            }
            let report = NoiseBoundReport::merge(reports);
            runtime(report.write_csv(&raw))?;
            write_json(&report_path, &report)?;
            report.passed
        }
        Check::Shots => {
            let net = config(theorem_network(v.shots.layers, v.noise.depth, v.noise.mixing))?;
            let params = net.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
            let report = runtime(verify_shot_noise(&net, &params, &v.shots.shots, v.shots.trials, seed))?;
            runtime(report.write_csv(&raw))?;
            write_json(&report_path, &report)?;
            report.passed
        }
        Check::Rf => {
            let net = config(Network::new(config(v.rf.architecture.spec())?))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut reports = Vec::new();
            for draw in 0..v.rf.draws {
                let params = generic_params(&net, seed.wrapping_add(1 + draw as u64));
                reports.push(runtime(probe_receptive_field(&net, &params, v.rf.eps, v.rf.trials, &mut rng))?);
            }
            let mut w = runtime(csv_writer(&raw, &["draw", "block", "probed", "theory", "contained", "equal"]))?;
            for (draw, r) in reports.iter().enumerate() {
                for f in &r.fields {
                    let row = [
                        draw.to_string(),
                        f.block.to_string(),
                        join(&f.probed),
                        join(&f.theory),
                        f.contained.to_string(),
                        f.equal.to_string(),
                    ];
                    runtime(w.write_record(&row))?;
                }
            }
            runtime(w.flush())?;
            let passed = reports.iter().all(|r| r.violations == 0 && !r.degenerate);
            write_json(&report_path, &json!({ "passed": passed, "draws": reports }))?;
            passed
        }
        Check::Contraction => {
            let c = &v.contraction;
            let mut reports = Vec::new();
            for &p in &c.p {
                reports.push(config(deep_contraction_experiment(c.q, c.max_depth, p, c.wire, c.inputs, seed))?);
            }
            let mut w = runtime(csv_writer(&raw, &["p", "depth", "input", "ideal", "noisy", "ratio", "used"]))?;
            for r in &reports {
                for pt in &r.points {
                    let row = [r.p, pt.depth as f64, pt.input as f64, pt.ideal, pt.noisy, pt.ratio, pt.used as u8 as f64];
                    runtime(w.write_record(row.iter().map(|v| v.to_string())))?;
                }
            }
            runtime(w.flush())?;
            let passed = reports.iter().all(|r| r.pass);
            write_json(&report_path, &json!({ "passed": passed, "fits": reports }))?;
            passed
        }
        Check::Mismatch => {
            let report = runtime(support_mismatch_experiment(&v.mismatch))?;
            let mut w = runtime(csv_writer(&raw, &["seed", "separable", "local", "global"]))?;
            for (seed, e) in v.mismatch.seeds.iter().zip(&report.per_seed) {
                let row = [seed.to_string(), e.separable.to_string(), e.local.to_string(), e.global.to_string()];
                runtime(w.write_record(&row))?;
            }
            runtime(w.flush())?;
            write_json(&report_path, &report)?;
            report.chain_holds
        }
    };
    if passed {
        Ok(dir)
    } else {
        Err(Failure::Verification(format!("{check:?} check violated; see {}", report_path.display())))
    }
}

fn csv_writer(path: &Path, header: &[&str]) -> csv::Result<csv::Writer<std::fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Trains every `(architecture, L, K)` cell and writes one per-epoch CSV
/// each; cells run `grad_scan.jobs` at a time.
pub fn grad_scan(cfg: &ExperimentConfig) -> Outcome<PathBuf> {
    config(cfg.validate_scan())?;
    let data = load_task(cfg)?;
    let mut cells = Vec::new();
    for arch in cfg.scan_architectures() {
        for &l in &cfg.grad_scan.layers {
            for &k in &cfg.grad_scan.depths {
                cells.push(ArchitectureConfig { hidden_layers: l, depth: k, ..arch.clone() });
            }
        }
    }
    let dir = open_run_dir(cfg, "grad-scan")?;
    let pool = runtime(rayon::ThreadPoolBuilder::new().num_threads(cfg.grad_scan.jobs).build())?;
    let rows: Vec<Outcome<serde_json::Value>> = pool.install(|| {
        cells
            .par_iter()
            .map(|arch| {
                let net = build_network(arch, &data.train)?;
                let result = train_net(cfg, &net, &data)?;
                let file = format!("grad_{}.csv", arch.label());
                runtime(result.history.write_csv(&dir.join(&file)))?;
                let trace = result.history.grad_trace();
                let max = trace.iter().copied().fold(0.0f64, f64::max);
                let min = trace.iter().copied().fold(f64::INFINITY, f64::min);
                Ok(json!({
                    "file": file,
                    "topology": arch.topology,
                    "q": arch.q,
                    "mixing": arch.mixing,
                    "hidden_layers": arch.hidden_layers,
                    "depth": arch.depth,
                    "n_params": net.n_params(),
                    "epochs": trace.len(),
                    "min_over_max": if max > 0.0 { min / max } else { f64::NAN },
                }))
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Outcome<Vec<_>>>()?;
    write_json(&dir.join("scan.json"), &rows)?;
    Ok(dir)
}

pub fn print_count(topology: &str, q: usize, layers: usize, depth: usize) -> Outcome<usize> {
    config(count_params(topology, q, layers, depth))
}
