//! Datasets: Gaussian blobs or CSV files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::numerics::{GaussianRng, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch {
                op: "dataset",
                left: features.shape(),
                right: (labels.len(), 1),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: n_classes,
            });
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn batch(&self, idx: &[usize]) -> (Matrix, Vec<usize>) {
        (self.features.select_rows(idx), idx.iter().map(|&i| self.labels[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Distance of every class mean from the origin, in units of the
    /// (unit) within-class standard deviation.
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 3,
            n_features: 2,
            n_train: 3000,
            n_test: 1000,
            class_separation: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSpec {
    pub path: PathBuf,
    /// Separate test file; when absent the last `test_fraction` of rows is held out.
    #[serde(default)]
    pub test_path: Option<PathBuf>,
    pub label_column: String,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Standardize features with train-split statistics.
    #[serde(default = "default_true")]
    pub standardize: bool,
}

fn default_test_fraction() -> f64 {
    0.25
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    Csv(CsvSpec),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic(SyntheticSpec::default())
    }
}

/// Class means evenly spaced on a circle of radius `separation` in the first
/// two features (on a line for one feature).
fn blob_centers(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    (0..spec.n_classes)
        .map(|k| {
            let mut c = vec![0.0; spec.n_features];
            if spec.n_features == 1 {
                c[0] = spec.class_separation * k as f64;
            } else {
                let theta = std::f64::consts::TAU * k as f64 / spec.n_classes as f64;
                c[0] = spec.class_separation * theta.cos();
                c[1] = spec.class_separation * theta.sin();
            }
            c
        })
        .collect()
}

pub fn synthetic_blobs(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    if spec.n_classes == 0 || spec.n_features == 0 {
        return Err(Error::InvalidConfig("blobs need at least one class and one feature".into()));
    }
    let centers = blob_centers(spec);
    let mut rng = GaussianRng::new(spec.seed);
    let mut make = |n: usize| -> Result<Dataset> {
        let mut data = Vec::with_capacity(n * spec.n_features);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let k = i % spec.n_classes;
            for &c in &centers[k] {
                data.push(c + rng.standard_normal());
            }
            labels.push(k);
        }
        Dataset::new(Matrix::new(n, spec.n_features, data)?, labels, spec.n_classes)
    };
    let train = make(spec.n_train)?;
    let test = make(spec.n_test)?;
    Ok((train, test))
}

fn read_csv(path: &PathBuf, label_column: &str) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::InvalidConfig(format!("label column '{label_column}' not in {}", path.display())))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut feats = Vec::with_capacity(rec.len().saturating_sub(1));
        for (i, field) in rec.iter().enumerate() {
            if i == label_at {
                let label: usize = field.trim().parse().map_err(|_| {
                    Error::InvalidConfig(format!("row {}: label '{field}' is not a class index", line + 2))
                })?;
                labels.push(label);
            } else {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidConfig(format!("row {}: '{field}' is not a number", line + 2))
                })?;
                feats.push(v);
            }
        }
        rows.push(feats);
    }
    Ok((rows, labels))
}

fn to_dataset(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Dataset> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidConfig("ragged CSV rows".into()));
    }
    let data = rows.iter().flatten().copied().collect();
    Dataset::new(Matrix::new(rows.len(), cols, data)?, labels.to_vec(), n_classes)
}

pub fn load_csv(spec: &CsvSpec, n_classes: usize) -> Result<(Dataset, Dataset)> {
    let (mut train_rows, mut train_labels) = read_csv(&spec.path, &spec.label_column)?;
    let (mut test_rows, test_labels) = match &spec.test_path {
        Some(p) => read_csv(p, &spec.label_column)?,
        None => {
            if !(0.0..1.0).contains(&spec.test_fraction) {
                return Err(Error::InvalidConfig("test_fraction must be in [0, 1)".into()));
            }
            let n_test = (train_rows.len() as f64 * spec.test_fraction).round() as usize;
            let split = train_rows.len() - n_test;
            (train_rows.split_off(split), train_labels.split_off(split))
        }
    };
    if spec.standardize && !train_rows.is_empty() {
        let cols = train_rows[0].len();
        let n = train_rows.len() as f64;
        for c in 0..cols {
            let mean = train_rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = train_rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for r in train_rows.iter_mut().chain(test_rows.iter_mut()) {
                if let Some(v) = r.get_mut(c) {
                    *v = (*v - mean) / sd;
                }
            }
        }
    }
    Ok((
        to_dataset(&train_rows, &train_labels, n_classes)?,
        to_dataset(&test_rows, &test_labels, n_classes)?,
    ))
}

impl DatasetSpec {
    /// Loads `(train, test)` and checks them against the network's dimensions.
    pub fn load(&self, n_features: usize, n_classes: usize) -> Result<(Dataset, Dataset)> {
        let (train, test) = match self {
            DatasetSpec::Synthetic(s) => {
                if s.n_classes != n_classes {
                    return Err(Error::InvalidConfig(format!(
                        "dataset has {} classes, network outputs {n_classes}",
                        s.n_classes
                    )));
                }
                synthetic_blobs(s)?
            }
            DatasetSpec::Csv(c) => load_csv(c, n_classes)?,
        };
        for d in [&train, &test] {
            if !d.is_empty() && d.n_features() != n_features {
                return Err(Error::InvalidConfig(format!(
                    "dataset has {} features, network expects {n_features}",
                    d.n_features()
                )));
            }
        }
        Ok((train, test))
    }
}
