//! Evaluation metrics and the per-epoch gradient-variance statistic.

use crate::error::{Error, Result};

/// `1 - SS_res / SS_tot`.
pub fn r2_score(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::Shape {
            what: "r2 predictions",
            expected: target.len(),
            got: pred.len(),
        });
    }
    if target.len() < 2 {
        return Err(Error::invalid("R^2 needs at least two samples"));
    }
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let ss_tot: f64 = target.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::invalid("R^2 undefined for constant targets"));
    }
    let ss_res: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn accuracy(pred: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
    hits as f64 / labels.len() as f64
}

/// Index of the largest entry; the first one on ties.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Population variance of all coordinates pooled across the given gradients.
pub fn gradient_variance<G: AsRef<[f64]>>(grads: &[G]) -> Result<f64> {
    let n: usize = grads.iter().map(|g| g.as_ref().len()).sum();
    if n == 0 {
        return Err(Error::invalid("gradient variance of no coordinates"));
    }
    let mean = grads.iter().flat_map(|g| g.as_ref()).sum::<f64>() / n as f64;
    let ss: f64 = grads.iter().flat_map(|g| g.as_ref()).map(|x| (x - mean).powi(2)).sum();
    Ok(ss / n as f64)
}
