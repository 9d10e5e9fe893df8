//! Acceptance suite: one test and one printed verdict line per criterion.
//!
//! Criteria that need the Concrete and Wine CSVs look for them under
//! `$FCVQC_DATA_DIR` (default `<workspace>/data`). When a file is missing
//! the line reads `NOT RUN` and nothing is asserted.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use fcvqc::data::{
    black_scholes_call, load_csv, portfolio_rel_mae, portfolio_samples, prepare, simulate_gbm, GbmConfig,
    PortfolioDefaults, PortfolioScenario, Task,
};
use fcvqc::network::{count_params, parse_topology, ArchOptions, Basis, FeatureMap, MixingRule, Network};
use fcvqc::qsim::{block_forward, block_gradient, BlockParams, Gate, GradientMethod, StateVector};
use fcvqc::theory::{
    deep_contraction_experiment, generic_params, linear_scaling, probe_receptive_field, support_mismatch_experiment,
    theorem_network, verify_noise_bound, verify_shot_noise, MismatchConfig, NoiseBoundReport, NoiseGrid, PROBE_EPS,
};
use fcvqc::train::{evaluate, fit, predict_all, BatchSize, Loss, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// Criteria share one core; timing-sensitive ones must not overlap.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

// Verdict lines go to the process stderr directly so that they survive
// libtest's output capture for passing tests.
fn emit(line: String) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    emit(format!("ACCEPTANCE C{id:02} {tag} {name}: {detail}"));
}

fn not_run(id: u32, name: &str, why: &str) {
    emit(format!("ACCEPTANCE C{id:02} NOT RUN {name}: {why}"));
}

fn data_dir() -> PathBuf {
    std::env::var_os("FCVQC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn find_csv(names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| data_dir().join(n)).find(|p| p.is_file())
}

fn concrete_csv() -> Option<PathBuf> {
    find_csv(&["concrete.csv", "Concrete_Data.csv", "concrete_data.csv"])
}

fn wine_csv() -> Option<PathBuf> {
    find_csv(&["winequality-red.csv", "wine.csv"])
}

fn network(topology: &str, q: usize, hidden: usize, depth: usize, mixing: MixingRule, basis: &[Basis]) -> Network {
    let opts = ArchOptions { q, hidden_layers: hidden, depth, mixing, feature_basis: basis.to_vec() };
    Network::new(parse_topology(topology, &opts).unwrap()).unwrap()
}

#[test]
fn c01_gradient_oracles() {
    let _g = serial();
    const REL_TOL: f64 = 1e-9;
    const ABS_TOL: f64 = 1e-5;
    const FD_STEP: f64 = 1e-6;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_rel, mut worst_abs) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let q = 1 + i % 4;
        let k = 1 + (i / 4) % 3;
        let n_out = rng.random_range(1..=q);
        let params = BlockParams::random(q, k, &mut rng);
        let x: Vec<f64> = (0..q).map(|_| rng.random_range(-2.0..2.0)).collect();
        let up: Vec<f64> = (0..n_out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let adj = block_gradient(&x, &params, &up, GradientMethod::Adjoint).unwrap();
        let ps = block_gradient(&x, &params, &up, GradientMethod::ParameterShift).unwrap();
        let scale = adj.d_params.iter().chain(&ps.d_params).fold(1e-3f64, |m, v| m.max(v.abs()));
        for (a, b) in adj.d_params.iter().zip(&ps.d_params).chain(adj.d_inputs.iter().zip(&ps.d_inputs)) {
            worst_rel = worst_rel.max((a - b).abs() / scale);
        }
        let f = |x: &[f64], p: &BlockParams| -> f64 {
            block_forward(x, p, n_out).unwrap().iter().zip(&up).map(|(z, u)| z * u).sum()
        };
        for j in 0..params.angles().len() {
            let (mut hi, mut lo) = (params.clone(), params.clone());
            hi.angles_mut()[j] += FD_STEP;
            lo.angles_mut()[j] -= FD_STEP;
            let fd = (f(&x, &hi) - f(&x, &lo)) / (2.0 * FD_STEP);
            worst_abs = worst_abs.max((fd - adj.d_params[j]).abs());
        }
        for j in 0..q {
            let (mut hi, mut lo) = (x.clone(), x.clone());
            hi[j] += FD_STEP;
            lo[j] -= FD_STEP;
            let fd = (f(&hi, &params) - f(&lo, &params)) / (2.0 * FD_STEP);
            worst_abs = worst_abs.max((fd - adj.d_inputs[j]).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_rel <= REL_TOL && worst_abs <= ABS_TOL && secs < 60.0;
    verdict(1, "gradient oracles", pass, &format!(
        "adjoint vs shift rel {worst_rel:.2e} (<= {REL_TOL:e}), adjoint vs FD abs {worst_abs:.2e} (<= {ABS_TOL:e}), {secs:.2}s"
    ));
    assert!(pass);
}

#[test]
fn c02_parameter_count_table() {
    let _g = serial();
    // Rows L = 1, 3, 5, 7, 9; columns K = 1, 3, 5, 7, 9.
    let table: [(&str, usize, [[usize; 5]; 5]); 5] = [
        ("8t3t1", 3, [
            [90, 270, 450, 630, 810],
            [144, 432, 720, 1008, 1296],
            [198, 594, 990, 1386, 1782],
            [252, 756, 1260, 1764, 2268],
            [306, 918, 1530, 2142, 2754],
        ]),
        ("16t4t1", 4, [
            [156, 468, 780, 1092, 1404],
            [252, 756, 1260, 1764, 2268],
            [348, 1044, 1740, 2436, 3132],
            [444, 1332, 2220, 3108, 3996],
            [540, 1620, 2700, 3780, 4860],
        ]),
        ("24t8t3t1", 3, [
            [252, 756, 1260, 1764, 2268],
            [396, 1188, 1980, 2772, 3564],
            [540, 1620, 2700, 3780, 4860],
            [684, 2052, 3420, 4788, 6156],
            [828, 2484, 4140, 5796, 7452],
        ]),
        ("32t11t4t1", 3, [
            [345, 1035, 1725, 2415, 3105],
            [543, 1629, 2715, 3801, 4887],
            [741, 2223, 3705, 5187, 6669],
            [939, 2817, 4695, 6573, 8451],
            [1137, 3411, 5685, 7959, 10233],
        ]),
        ("40t14t5t1", 3, [
            [438, 1314, 2190, 3066, 3942],
            [690, 2070, 3450, 4830, 6210],
            [942, 2826, 4710, 6594, 8478],
            [1194, 3582, 5970, 8358, 10746],
            [1446, 4338, 7230, 10122, 13014],
        ]),
    ];
    let mut mismatches = Vec::new();
    for (topology, q, rows) in table {
        for (li, row) in rows.iter().enumerate() {
            for (ki, &want) in row.iter().enumerate() {
                let (l, k) = (2 * li + 1, 2 * ki + 1);
                let got = count_params(topology, q, l, k).unwrap();
                if got != want {
                    mismatches.push(format!("{topology} L={l} K={k}: {got} != {want}"));
                }
            }
        }
    }
    let pass = mismatches.is_empty();
    verdict(2, "parameter-count table", pass, &format!("125 cells, {} mismatches {:?}", mismatches.len(), mismatches));
    assert!(pass);
}

#[test]
fn c03_noise_bound_grid() {
    let _g = serial();
    let start = Instant::now();
    let grid = NoiseGrid { trials: 200, seed: 303, ..NoiseGrid::default() };
    let mut reports = Vec::new();
    for layers in 1..=3 {
        let net = theorem_network(layers, 2, MixingRule::FullyConnected).unwrap();
        let params = net.init_params(&mut ChaCha8Rng::seed_from_u64(30 + layers as u64));
        reports.push(verify_noise_bound(&net, &params, &grid).unwrap());
    }
    let report = NoiseBoundReport::merge(reports);
    let secs = start.elapsed().as_secs_f64();
    let worst = report
        .points
        .iter()
        .filter(|p| p.rhs > 0.0)
        .map(|p| p.empirical_mean / p.rhs)
        .fold(0.0f64, f64::max);
    let pass = report.passed && report.points.len() == 27 && secs < 900.0;
    verdict(3, "noise-propagation bound", pass, &format!(
        "{} points x 200 trials, violations {}, max empirical/RHS {worst:.3}, {secs:.1}s",
        report.points.len(),
        report.points.iter().filter(|p| !p.pass).count()
    ));
    for p in &report.points {
        println!(
            "    L={} p={} S={:?}: empirical {:.4} +/- {:.4}, RHS {:.4}",
            p.layers, p.p, p.shots, p.empirical_mean, p.empirical_se, p.rhs
        );
    }
    assert!(pass);
}

#[test]
fn c04_shot_noise_bound() {
    let _g = serial();
    let net = theorem_network(3, 2, MixingRule::FullyConnected).unwrap();
    let params = net.init_params(&mut ChaCha8Rng::seed_from_u64(44));
    let report = verify_shot_noise(&net, &params, &[25, 100, 400], 100, 404).unwrap();
    let detail: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("S={}: max layer mean {:.4} vs {:.4}", p.shots, p.mean_norm.iter().fold(0.0f64, |a, &b| a.max(b)), p.bound[0]))
        .collect();
    verdict(4, "shot-noise bound", report.passed, &detail.join("; "));
    assert!(report.passed);
}

#[test]
fn c05_receptive_fields() {
    let _g = serial();
    let cases: [(&str, &str, usize, MixingRule); 6] = [
        ("parallel L=1", "9", 1, MixingRule::Parallel),
        ("parallel L=2", "9", 2, MixingRule::Parallel),
        ("fully connected L=1", "9", 1, MixingRule::FullyConnected),
        ("fully connected L=2", "9", 2, MixingRule::FullyConnected),
        ("sliding window 1 site", "15", 1, MixingRule::SlidingWindow),
        ("sliding window 2 sites", "15", 2, MixingRule::SlidingWindow),
    ];
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for (name, topology, hidden, mixing) in cases {
        let net = network(topology, 3, hidden, 2, mixing, &[Basis::Identity]);
        for draw in 0..20 {
            let params = generic_params(&net, 5000 + draw);
            let r = probe_receptive_field(&net, &params, PROBE_EPS, 5, &mut rng).unwrap();
            let ok = match mixing {
                MixingRule::Parallel => r.fields.iter().all(|f| f.probed == vec![f.block]),
                MixingRule::FullyConnected => r.fields.iter().all(|f| f.probed == vec![0, 1, 2]),
                MixingRule::SlidingWindow => r.violations == 0 && r.max_ring_distance <= hidden * r.radius,
            };
            if !ok || r.degenerate {
                failures.push(format!("{name} draw {draw}"));
            }
        }
    }
    let pass = failures.is_empty();
    verdict(5, "receptive fields", pass, &format!("6 configurations x 20 draws, violations {:?}", failures));
    assert!(pass);
}

#[test]
fn c06_deep_contraction() {
    let _g = serial();
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [0.02, 0.05] {
        let r = deep_contraction_experiment(2, 20, p, 0, 8, 606).unwrap();
        pass &= r.pass;
        detail.push(format!("p={p}: lambda {:.4} vs {:.4} (rel {:.2}%)", r.lambda_fit, r.lambda_expected, 100.0 * r.relative_error));
    }
    verdict(6, "deep contraction", pass, &detail.join("; "));
    assert!(pass);
}

/// Trains on the Concrete split; the feature expansion is fitted on the
/// training rows only.
#[allow(clippy::too_many_arguments)]
fn concrete_r2(path: &Path, topology: &str, q: usize, hidden: usize, depth: usize, mixing: MixingRule, basis: &[Basis], epochs: usize) -> f64 {
    let data = load_csv(path, "", Task::Regression).unwrap();
    let prepared = prepare(&data, (0.7, 0.15, 0.15), 7).unwrap();
    let opts = ArchOptions { q, hidden_layers: hidden, depth, mixing, feature_basis: basis.to_vec() };
    let features = FeatureMap::fit(basis.to_vec(), &prepared.train.x).unwrap();
    let net = &Network::with_features(parse_topology(topology, &opts).unwrap(), features).unwrap();
    let cfg = TrainConfig { learning_rate: 0.005, epochs, batch_size: BatchSize::Full, seed: 7, ..TrainConfig::default() };
    let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(7));
    let result = fit(net, init, &prepared.train, &prepared.val, &cfg).unwrap();
    evaluate(net, &result.params, &prepared.test, Loss::Mse).unwrap().1
}

#[test]
fn c07_concrete_ordering() {
    let _g = serial();
    let name = "Concrete 16t4t1 vs SingleVQC_8";
    let Some(path) = concrete_csv() else {
        return not_run(7, name, &format!("no Concrete CSV under {}", data_dir().display()));
    };
    let start = Instant::now();
    let r2_modular =
        concrete_r2(&path, "16t4t1", 4, 3, 3, MixingRule::FullyConnected, &[Basis::Identity, Basis::Square], 1000);
    let r2_mono = concrete_r2(&path, "single8t1", 8, 1, 9, MixingRule::Parallel, &[Basis::Identity], 1000);
    let pass = r2_modular >= 0.80 && r2_mono <= 0.72;
    verdict(7, name, pass, &format!(
        "test R2 {r2_modular:.4} (>= 0.80) vs {r2_mono:.4} (<= 0.72), {:.0}s",
        start.elapsed().as_secs_f64()
    ));
    assert!(pass);
}

#[test]
fn c08_wine_accuracy() {
    let _g = serial();
    let name = "Wine 12t8t6";
    let Some(path) = wine_csv() else {
        return not_run(8, name, &format!("no Wine CSV under {}", data_dir().display()));
    };
    let data = load_csv(&path, "quality", Task::Classification).unwrap();
    let prepared = prepare(&data, (0.7, 0.15, 0.15), 8).unwrap();
    let opts = ArchOptions { q: 3, hidden_layers: 3, depth: 9, mixing: MixingRule::SlidingWindow, ..ArchOptions::default() };
    let features = FeatureMap::identity(vec![Basis::Identity], data.dim());
    let net = Network::with_features(parse_topology("12t8t6", &opts).unwrap(), features).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.005,
        epochs: 1000,
        batch_size: BatchSize::Full,
        seed: 8,
        loss: Loss::CrossEntropy,
        ..TrainConfig::default()
    };
    let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(8));
    let result = fit(&net, init, &prepared.train, &prepared.val, &cfg).unwrap();
    let acc = evaluate(&net, &result.params, &prepared.test, Loss::CrossEntropy).unwrap().1;
    let pass = acc >= 0.55;
    verdict(8, name, pass, &format!("test accuracy {acc:.4} (>= 0.55)"));
    assert!(pass);
}

/// Black-Scholes prices of `paths`, flattened in scenario layout.
fn bs_rows(scenario: &PortfolioScenario, paths: &[usize]) -> Vec<f64> {
    let c = &scenario.config;
    paths
        .iter()
        .flat_map(|&i| {
            let at = c.index(i, 0, 0);
            scenario.bs_prices[at..at + (c.steps + 1) * c.assets()].to_vec()
        })
        .collect()
}

fn portfolio_run(scenario: &PortfolioScenario, net: &Network, seed: u64) -> f64 {
    let data = portfolio_samples(scenario, 0.2, seed).unwrap();
    let cfg = TrainConfig { learning_rate: 0.01, epochs: 100, batch_size: BatchSize::Count(64), seed, ..TrainConfig::default() };
    let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
    let result = fit(net, init, &data.train, &data.val, &cfg).unwrap();
    let pred = data.unscale(&predict_all(net, &result.params, &data.val.x).unwrap());
    let c = &scenario.config;
    portfolio_rel_mae(&pred, &bs_rows(scenario, &data.val_paths), data.val_paths.len(), c.steps, c.assets()).unwrap()
}

/// RelMAE of the best mean-square predictor that sees only the prices of
/// the `width` assets sharing a block. The time step is not an input, so the
/// predictor averages Black-Scholes over the exact posterior of the step
/// given the block's log-returns (uniform prior; step 0 is recognizable
/// because every return is exactly zero). No model with that block layout
/// can do systematically better.
fn block_bayes_floor(scenario: &PortfolioScenario, val_paths: &[usize], width: usize) -> f64 {
    let c = &scenario.config;
    let (d, m) = (c.assets(), c.steps);
    let mut pred = Vec::with_capacity(val_paths.len() * (m + 1) * d);
    for &i in val_paths {
        for k in 0..=m {
            let price = |j: usize| scenario.paths[c.index(i, k, j)];
            let ret: Vec<f64> = (0..d).map(|j| (price(j) / c.s0[j]).ln()).collect();
            for b in 0..d / width {
                let cols = b * width..(b + 1) * width;
                let weights: Vec<f64> = if ret[cols.clone()].iter().all(|&x| x == 0.0) {
                    (0..=m).map(|s| if s == 0 { 1.0 } else { 0.0 }).collect()
                } else {
                    let ll: Vec<f64> = (0..=m)
                        .map(|s| {
                            if s == 0 {
                                return f64::NEG_INFINITY;
                            }
                            let t = c.time(s);
                            cols.clone()
                                .map(|j| {
                                    let sd = c.sigma[j] * t.sqrt();
                                    let mu = (c.r - 0.5 * c.sigma[j] * c.sigma[j]) * t;
                                    -0.5 * ((ret[j] - mu) / sd).powi(2) - sd.ln()
                                })
                                .sum()
                        })
                        .collect();
                    let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = ll.iter().map(|l| (l - top).exp()).collect();
                    let z: f64 = w.iter().sum();
                    w.iter().map(|x| x / z).collect()
                };
                for j in cols {
                    let v: f64 = (0..=m)
                        .filter(|&s| weights[s] > 0.0)
                        .map(|s| weights[s] * black_scholes_call(price(j), c.strikes[j], c.r, c.sigma[j], (c.t - c.time(s)).max(0.0)).unwrap())
                        .sum();
                    pred.push(v);
                }
            }
        }
    }
    portfolio_rel_mae(&pred, &bs_rows(scenario, val_paths), val_paths.len(), m, d).unwrap()
}

#[test]
fn c09_portfolio_granularity() {
    let _g = serial();
    let start = Instant::now();
    let scenario = PortfolioScenario::generate(GbmConfig::random_portfolio(36, 909, &PortfolioDefaults::default())).unwrap();
    let q3 = network("36", 3, 3, 7, MixingRule::Parallel, &[Basis::Identity]);
    let q6 = network("36", 6, 3, 9, MixingRule::FullyConnected, &[Basis::Identity]);
    let rel_q3 = portfolio_run(&scenario, &q3, 9);
    let rel_q6 = portfolio_run(&scenario, &q6, 9);
    let secs = start.elapsed().as_secs_f64();
    let val_paths = portfolio_samples(&scenario, 0.2, 9).unwrap().val_paths;
    let floor_q3 = block_bayes_floor(&scenario, &val_paths, 3);
    let floor_q6 = block_bayes_floor(&scenario, &val_paths, 6);
    let pass = rel_q3 <= 0.06 && rel_q3 < rel_q6 && secs < 3600.0;
    verdict(9, "portfolio d=36 granularity", pass, &format!(
        "QNN_Q3_Parallel RelMAE {rel_q3:.4} (<= 0.06), QNN_Q6 {rel_q6:.4}, {secs:.0}s; \
         best achievable from 3-asset blocks {floor_q3:.4}, from 6-asset blocks {floor_q6:.4}"
    ));
    assert!(pass);
}

/// Min/max of the per-epoch gradient-variance trace, and the final training
/// loss as a fraction of the first.
fn trace_ratio(path: &Path, net: &Network) -> (f64, f64) {
    let data = load_csv(path, "", Task::Regression).unwrap();
    let prepared = prepare(&data, (0.7, 0.15, 0.15), 10).unwrap();
    let cfg = TrainConfig { learning_rate: 0.005, epochs: 500, batch_size: BatchSize::Full, seed: 10, ..TrainConfig::default() };
    let init = net.init_params(&mut ChaCha8Rng::seed_from_u64(10));
    let history = fit(net, init, &prepared.train, &prepared.val, &cfg).unwrap().history;
    let trace = history.grad_trace();
    let max = trace.iter().fold(0.0f64, |a, &b| a.max(b));
    let losses = history.train_losses();
    (trace.iter().fold(f64::INFINITY, |a, &b| a.min(b)) / max, losses[losses.len() - 1] / losses[0])
}

#[test]
fn c10_gradient_phase_contrast() {
    let _g = serial();
    let name = "gradient-variance phases on Concrete";
    let Some(path) = concrete_csv() else {
        return not_run(10, name, &format!("no Concrete CSV under {}", data_dir().display()));
    };
    let type1 = network("single8t1", 8, 1, 9, MixingRule::Parallel, &[Basis::Identity]);
    let modular = network("8t3t1", 3, 3, 5, MixingRule::FullyConnected, &[Basis::Identity]);
    let (r1, l1) = trace_ratio(&path, &type1);
    let (r3, l3) = trace_ratio(&path, &modular);
    let pass = r1 <= 0.01 && r3 >= 0.05;
    verdict(10, name, pass, &format!(
        "Type 1 min/max {r1:.2e} (<= 0.01), 8t3t1 min/max {r3:.2e} (>= 0.05); \
         final/initial train loss {l1:.3} and {l3:.3}"
    ));
    assert!(pass);
}

#[test]
fn c11_linear_scaling() {
    let _g = serial();
    let r = linear_scaling(&[30, 60, 120, 240], 200, 5, 11).unwrap();
    let pass = (r.exponent - 1.0).abs() <= 0.15;
    verdict(11, "linear scaling", pass, &format!("exponent {:.3} (1.0 +/- 0.15), times {:?}", r.exponent, r.seconds));
    assert!(pass);
}

#[test]
fn c12_support_mismatch_chain() {
    let _g = serial();
    let cfg = MismatchConfig::default();
    let r = support_mismatch_experiment(&cfg).unwrap();
    verdict(12, "support-mismatch chain", r.chain_holds, &format!(
        "5-seed means E_sep {:.5} >= E_loc {:.5} >= E_glob {:.5} (5% slack)",
        r.mean.separable, r.mean.local, r.mean.global
    ));
    assert!(r.chain_holds);
}

#[test]
fn c13_numerical_hygiene() {
    let _g = serial();
    // Norm drift after random gates.
    let mut rng = ChaCha8Rng::seed_from_u64(1313);
    let q = 6;
    let mut psi = StateVector::zero(q);
    for _ in 0..10_000 {
        let gate = match rng.random_range(0..3) {
            0 => Gate::Ry { wire: rng.random_range(0..q), angle: rng.random_range(-6.3..6.3) },
            1 => Gate::Rz { wire: rng.random_range(0..q), angle: rng.random_range(-6.3..6.3) },
            _ => {
                let control = rng.random_range(0..q);
                Gate::Cnot { control, target: (control + rng.random_range(1..q)) % q }
            }
        };
        psi.apply_gate(&gate).unwrap();
    }
    let drift = (psi.norm_sqr() - 1.0).abs();

    // Discounted terminal prices form a martingale.
    let cfg = GbmConfig {
        s0: vec![100.0],
        strikes: vec![100.0],
        sigma: vec![0.3],
        r: 0.05,
        t: 1.0,
        steps: 10,
        paths: 100_000,
        seed: 13,
    };
    let paths = simulate_gbm(&cfg).unwrap();
    let disc: Vec<f64> = (0..cfg.paths).map(|i| (-cfg.r * cfg.t).exp() * paths[cfg.index(i, 10, 0)]).collect();
    let (m, se) = mean_se(&disc);
    let martingale_z = (m - 100.0).abs() / se;

    // Black-Scholes against an independent Monte Carlo estimate.
    let n = 1_000_000;
    let mut payoffs = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let st = 100.0 * ((0.05 - 0.02) + 0.2 * z).exp();
        payoffs.push((-0.05f64).exp() * (st - 100.0f64).max(0.0));
    }
    let (mc, mc_se) = mean_se(&payoffs);
    let bs = black_scholes_call(100.0, 100.0, 0.05, 0.2, 1.0).unwrap();
    let bs_z = (mc - bs).abs() / mc_se;

    let pass = drift <= 1e-12 && martingale_z <= 3.0 && bs_z <= 3.0;
    verdict(13, "numerical hygiene", pass, &format!(
        "norm drift {drift:.1e} (<= 1e-12), martingale {martingale_z:.2} SE, BS {bs:.4} vs MC {mc:.4} at {bs_z:.2} SE"
    ));
    assert!(pass);
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
