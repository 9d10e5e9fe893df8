//! Empirical checks of the noise-propagation bound, shot noise, deep
//! contraction, receptive fields, support mismatch and linear scaling.

mod contraction;
mod mismatch;
mod noise_bound;
mod receptive;
mod scaling;

use std::path::Path;

use crate::error::Result;

pub use contraction::{deep_contraction_experiment, ContractionPoint, ContractionReport, MIN_SIGNAL};
pub use mismatch::{support_mismatch_experiment, target, ErrorTriple, MismatchConfig, MismatchReport, TargetWeights};
pub use noise_bound::{
    estimate_bias, noise_bound_rhs, theorem_network, verify_noise_bound, verify_shot_noise, NoiseBoundPoint,
    NoiseBoundReport, NoiseGrid, ShotNoisePoint, ShotNoiseReport,
};
pub use receptive::{
    generic_params, probe_receptive_field, theoretical_field, BlockField, ReceptiveFieldReport, INFLUENCE_THRESHOLD,
    PROBE_EPS,
};
pub use scaling::{linear_scaling, ScalingReport};

/// Sample mean and its standard error.
pub(crate) fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub(crate) fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| crate::Error::io(path, e))
}
