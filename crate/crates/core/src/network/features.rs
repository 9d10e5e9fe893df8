//! Deterministic feature expansion for narrow inputs.
//!
//! The expanded vector is basis-major: `[b_1(x); b_2(x); ...; b_m(x)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Added inside the logarithm so that zero maps to a finite value.
pub const LOG_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Identity,
    Square,
    Cube,
    Sqrt,
    Log,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Identity => "identity",
            Basis::Square => "square",
            Basis::Cube => "cube",
            Basis::Sqrt => "sqrt",
            Basis::Log => "log",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "identity" | "id" | "x" => Ok(Basis::Identity),
            "square" | "x2" => Ok(Basis::Square),
            "cube" | "x3" => Ok(Basis::Cube),
            "sqrt" => Ok(Basis::Sqrt),
            "log" => Ok(Basis::Log),
            other => Err(Error::Config(format!("unknown feature map {other:?}"))),
        }
    }

    /// Whether the map needs a nonnegative (or positive) argument.
    pub fn needs_shift(self) -> bool {
        matches!(self, Basis::Sqrt | Basis::Log)
    }

    pub fn apply(self, v: f64) -> Result<f64> {
        match self {
            Basis::Identity => Ok(v),
            Basis::Square => Ok(v * v),
            Basis::Cube => Ok(v * v * v),
            Basis::Sqrt if v >= 0.0 => Ok(v.sqrt()),
            Basis::Log if v + LOG_EPS > 0.0 => Ok((v + LOG_EPS).ln()),
            Basis::Sqrt | Basis::Log => Err(Error::invalid(format!(
                "{} of negative value {v}",
                self.name()
            ))),
        }
    }
}

/// Unshifted expansion: `sqrt` and `log` reject negative inputs.
pub fn feature_expand(x: &[f64], basis: &[Basis]) -> Result<Vec<f64>> {
    if basis.is_empty() {
        return Err(Error::invalid("feature basis must not be empty"));
    }
    let mut out = Vec::with_capacity(x.len() * basis.len());
    for b in basis {
        for &v in x {
            out.push(b.apply(v)?);
        }
    }
    Ok(out)
}

/// Expansion with train-fitted preprocessing: `sqrt` and `log` see
/// `x + shift` (shift makes the training minimum equal to one), and every
/// expanded column is standardized with train statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub basis: Vec<Basis>,
    pub shift: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureMap {
    /// Plain basis-major expansion with no shift or scaling.
    pub fn identity(basis: Vec<Basis>, dim: usize) -> Self {
        let m = basis.len();
        FeatureMap {
            basis,
            shift: vec![0.0; dim],
            mean: vec![0.0; m * dim],
            std: vec![1.0; m * dim],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.basis == [Basis::Identity]
            && self.mean.iter().all(|&m| m == 0.0)
            && self.std.iter().all(|&s| s == 1.0)
    }

    pub fn fit(basis: Vec<Basis>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid("cannot fit a feature map on no data"));
        }
        let shift = (0..dim)
            .map(|j| 1.0 - rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut map = FeatureMap::identity(basis, dim);
        map.shift = shift;
        let raw: Vec<Vec<f64>> = rows.iter().map(|r| map.raw_expand(r)).collect::<Result<_>>()?;
        let n = raw.len() as f64;
        for c in 0..map.mean.len() {
            let mean = raw.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = raw.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            map.mean[c] = mean;
            map.std[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(map)
    }

    pub fn input_dim(&self) -> usize {
        self.shift.len()
    }

    pub fn output_dim(&self) -> usize {
        self.mean.len()
    }

    fn raw_expand(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.output_dim());
        for b in &self.basis {
            for (v, s) in x.iter().zip(&self.shift) {
                let arg = if b.needs_shift() { v + s } else { *v };
                out.push(b.apply(arg)?);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                what: "feature vector",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut out = self.raw_expand(x)?;
        for ((v, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
        Ok(out)
    }
}
