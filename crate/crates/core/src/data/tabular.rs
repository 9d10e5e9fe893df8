//! CSV ingestion, seeded splits and train-fitted scaling.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::{Samples, Targets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetColumn {
    Real(Vec<f64>),
    /// Contiguous class indices plus the original value of each class.
    Class { labels: Vec<usize>, classes: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    pub path: PathBuf,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub target: TargetColumn,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> Option<usize> {
        match &self.target {
            TargetColumn::Class { classes, .. } => Some(classes.len()),
            TargetColumn::Real(_) => None,
        }
    }
}

fn detect_delimiter(path: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = text.lines().next().unwrap_or("");
    Ok(if header.contains(';') && !header.contains(',') { b';' } else { b',' })
}

/// Reads a headed CSV. `target` names a column, gives its 0-based index, or
/// is empty for the last column. Semicolon-separated files are accepted too.
pub fn load_csv(path: &Path, target: &str, task: Task) -> Result<TabularDataset> {
    let delimiter = detect_delimiter(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim_matches('"').to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            msg: "need at least one feature column and one target column".into(),
        });
    }
    let target_idx = if target.is_empty() {
        headers.len() - 1
    } else if let Some(i) = headers.iter().position(|h| h == target) {
        i
    } else {
        match target.parse::<usize>() {
            Ok(i) if i < headers.len() => i,
            _ => {
                return Err(Error::Dataset {
                    path: path.to_path_buf(),
                    msg: format!("missing target column {target:?}"),
                })
            }
        }
    };

    let mut features = Vec::new();
    let mut raw_target = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut x = Vec::with_capacity(headers.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Cell {
                path: path.to_path_buf(),
                row: row + 1,
                column: headers.get(col).cloned().unwrap_or_else(|| col.to_string()),
                value: cell.to_string(),
            })?;
            if col == target_idx {
                raw_target.push(v);
            } else {
                x.push(v);
            }
        }
        features.push(x);
    }
    if features.is_empty() {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            msg: "no data rows".into(),
        });
    }

    let target = match task {
        Task::Regression => TargetColumn::Real(raw_target),
        Task::Classification => {
            let mut classes = raw_target.clone();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            let labels = raw_target
                .iter()
                .map(|v| classes.iter().position(|c| c == v).expect("class present"))
                .collect();
            TargetColumn::Class { labels, classes }
        }
    };
    let feature_names = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(TabularDataset {
        path: path.to_path_buf(),
        feature_names,
        features,
        target,
    })
}

/// Disjoint index sets covering `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle cut at `round(n*f_train)` and `round(n*f_val)`.
pub fn split_indices(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split fractions must sum to 1, got {fractions:?}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * a).round() as usize;
    let n_val = ((n as f64 * b).round() as usize).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Split { train: idx, val, test })
}

/// Per-column affine map to zero mean and unit variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Columns with zero spread keep unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 { var.sqrt() } else { 1.0 }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Per-output affine map of the training range onto `[-margin, margin]`,
/// so regression targets fit the `[-1, 1]` range of Pauli-Z readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

pub const TARGET_MARGIN: f64 = 0.9;

impl TargetScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let mut center = Vec::with_capacity(d);
        let mut scale = Vec::with_capacity(d);
        for j in 0..d {
            let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            center.push(0.5 * (lo + hi));
            let half = 0.5 * (hi - lo);
            scale.push(if half > 0.0 { half / TARGET_MARGIN } else { 1.0 });
        }
        TargetScaler { center, scale }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.center).zip(&self.scale).map(|((v, c), s)| (v - c) / s).collect()
    }

    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.center).zip(&self.scale).map(|((v, c), s)| v * s + c).collect()
    }
}

/// Standardized, model-ready splits of a tabular dataset.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub split: Split,
    pub standardizer: Standardizer,
    pub target_scaler: Option<TargetScaler>,
    pub train: Samples,
    pub val: Samples,
    pub test: Samples,
}

impl PreparedData {
    /// Targets of `part` on the original scale (regression only).
    pub fn raw_targets(&self, part: &Samples) -> Option<Vec<f64>> {
        let scaler = self.target_scaler.as_ref()?;
        match &part.targets {
            Targets::Values(v) => Some(v.iter().map(|y| scaler.invert(y)[0]).collect()),
            Targets::Labels(_) => None,
        }
    }
}

/// Splits, fits feature standardization (and target scaling for regression)
/// on the training part, and applies both everywhere.
pub fn prepare(data: &TabularDataset, fractions: (f64, f64, f64), seed: u64) -> Result<PreparedData> {
    let split = split_indices(data.len(), fractions, seed)?;
    if split.train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    let train_rows: Vec<Vec<f64>> = split.train.iter().map(|&i| data.features[i].clone()).collect();
    let standardizer = Standardizer::fit(&train_rows);
    let target_scaler = match &data.target {
        TargetColumn::Real(y) => Some(TargetScaler::fit(
            &split.train.iter().map(|&i| vec![y[i]]).collect::<Vec<_>>(),
        )),
        TargetColumn::Class { .. } => None,
    };
    let part = |idx: &[usize]| Samples {
        x: idx.iter().map(|&i| standardizer.apply(&data.features[i])).collect(),
        targets: match &data.target {
            TargetColumn::Real(y) => {
                let s = target_scaler.as_ref().expect("regression scaler");
                Targets::Values(idx.iter().map(|&i| s.apply(&[y[i]])).collect())
            }
            TargetColumn::Class { labels, .. } => Targets::Labels(idx.iter().map(|&i| labels[i]).collect()),
        },
    };
    Ok(PreparedData {
        train: part(&split.train),
        val: part(&split.val),
        test: part(&split.test),
        split,
        standardizer,
        target_scaler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_regression_and_classification() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "r.csv", "a,b,y\n1,2,3.5\n4,5,6.5\n");
        let d = load_csv(&p, "y", Task::Regression).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.features[1], vec![4.0, 5.0]);
        assert_eq!(d.target, TargetColumn::Real(vec![3.5, 6.5]));

        let p = write(dir.path(), "c.csv", "\"f1\";\"quality\";\"f2\"\n0.1;5;1\n0.2;7;2\n0.3;5;3\n0.4;3;4\n");
        let d = load_csv(&p, "quality", Task::Classification).unwrap();
        assert_eq!(d.feature_names, vec!["f1", "f2"]);
        assert_eq!(
            d.target,
            TargetColumn::Class { labels: vec![1, 2, 1, 0], classes: vec![3.0, 5.0, 7.0] }
        );
        assert_eq!(load_csv(&p, "", Task::Regression).unwrap().target, TargetColumn::Real(vec![1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn ingestion_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "h.csv", "a,b,y\n");
        assert!(matches!(load_csv(&p, "y", Task::Regression), Err(Error::Dataset { .. })));
        let p = write(dir.path(), "m.csv", "a,b,y\n1,2,3\n");
        assert!(load_csv(&p, "z", Task::Regression).is_err());
        let p = write(dir.path(), "bad.csv", "a,b,y\n1,2,3\n1,x,3\n");
        match load_csv(&p, "y", Task::Regression) {
            Err(Error::Cell { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "b")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn split_properties() {
        let s = split_indices(100, (0.7, 0.15, 0.15), 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 15, 15));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(s, split_indices(100, (0.7, 0.15, 0.15), 3).unwrap());
        assert_ne!(s, split_indices(100, (0.7, 0.15, 0.15), 4).unwrap());
        assert!(split_indices(100, (0.7, 0.2, 0.2), 3).is_err());
    }

    #[test]
    fn prepare_fits_on_train_only() {
        let features: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let data = TabularDataset {
            path: PathBuf::new(),
            feature_names: vec!["a".into(), "b".into()],
            target: TargetColumn::Real((0..40).map(|i| 10.0 + i as f64).collect()),
            features,
        };
        let p = prepare(&data, (0.7, 0.15, 0.15), 1).unwrap();
        let mean0 = p.train.x.iter().map(|r| r[0]).sum::<f64>() / p.train.len() as f64;
        assert!(mean0.abs() < 1e-12);
        let Targets::Values(v) = &p.train.targets else { panic!() };
        assert!(v.iter().all(|y| y[0].abs() <= TARGET_MARGIN + 1e-12));
        let raw = p.raw_targets(&p.test).unwrap();
        for (r, &i) in raw.iter().zip(&p.split.test) {
            assert!((r - (10.0 + i as f64)).abs() < 1e-9);
        }
    }
}
