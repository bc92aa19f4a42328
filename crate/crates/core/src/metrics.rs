//! Compression quality: entropy, unique values, accuracy, movement statistics.
//!
//! Distinct weight values are identified by the bit pattern of their `f32`
//! representation, the precision checkpoints store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bayes::{sample_weights, WeightStore};
use crate::clustering::Assignment;
use crate::data::Dataset;
use crate::numerics::{argmax, softmax_rows, GaussianRng, Matrix, NetworkSpec};
use crate::{Error, Result};

fn histogram(values: impl IntoIterator<Item = f64>) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry((v as f32).to_bits()).or_insert(0) += 1;
    }
    counts
}

/// Shannon entropy in bits of the occupancy of distinct values.
pub fn entropy_of_values(values: impl IntoIterator<Item = f64>) -> f64 {
    let counts = histogram(values);
    let n: usize = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

pub fn unique_values(values: impl IntoIterator<Item = f64>) -> usize {
    histogram(values).len()
}

/// Entropy of all means, biases included.
pub fn weight_entropy(store: &WeightStore) -> f64 {
    entropy_of_values(store.weights().iter().map(|w| w.mu))
}

pub fn unique_count(store: &WeightStore) -> usize {
    unique_values(store.weights().iter().map(|w| w.mu))
}

pub fn predictions(spec: &NetworkSpec, params: &[Matrix], inputs: &Matrix) -> Result<Vec<usize>> {
    let logits = spec.logits(params, inputs)?;
    Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
}

fn accuracy(pred: &[usize], labels: &[usize]) -> f64 {
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

/// Top-1 accuracy of a point network. Ties go to the lowest class index.
pub fn evaluate_point(spec: &NetworkSpec, params: &[Matrix], data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation dataset"));
    }
    Ok(accuracy(&predictions(spec, params, &data.features)?, &data.labels))
}

/// Top-1 accuracy of the mean softmax over `samples` weight draws.
pub fn evaluate_ensemble(store: &WeightStore, data: &Dataset, rng: &mut GaussianRng, samples: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation dataset"));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("ensemble needs at least one sample".into()));
    }
    let spec = store.spec();
    let mut mean = Matrix::zeros(data.len(), spec.output_dim());
    for _ in 0..samples {
        let (params, _) = sample_weights(store, rng, true);
        let probs = softmax_rows(&spec.logits(&params, &data.features)?);
        for (m, p) in mean.data_mut().iter_mut().zip(probs.data()) {
            *m += p;
        }
    }
    let pred: Vec<usize> = (0..mean.rows()).map(|r| argmax(mean.row(r))).collect();
    Ok(accuracy(&pred, &data.labels))
}

/// Movement statistics for one cluster (all assignments of one center in one
/// round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMovement {
    pub round: usize,
    pub center: f64,
    pub center_ticks: i64,
    pub cluster_index: u32,
    pub omega: u32,
    pub delta: f64,
    pub members: usize,
    /// Relative distance `|mu - c| / |c|`; `None` for the zero center.
    pub mean_relative: Option<f64>,
    pub max_relative: Option<f64>,
    /// Absolute movement, reported only for the zero center.
    pub mean_absolute_zero: Option<f64>,
    pub max_absolute_zero: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMovement {
    pub round: usize,
    pub clusters: usize,
    pub members: usize,
    /// Over members of non-zero centers.
    pub mean_relative: Option<f64>,
    pub max_relative: Option<f64>,
    pub zero_members: usize,
    pub mean_absolute_zero: Option<f64>,
    pub max_absolute_zero: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RelativeDistanceReport {
    pub clusters: Vec<ClusterMovement>,
    pub rounds: Vec<RoundMovement>,
}

/// `|mu - c| / |c|`, undefined for `c = 0`.
pub fn relative_distance(mu: f64, center: f64) -> Option<f64> {
    (center != 0.0).then(|| (mu - center).abs() / center.abs())
}

#[derive(Default)]
struct Acc {
    n: usize,
    sum: f64,
    max: f64,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.max = if self.n == 1 { v } else { self.max.max(v) };
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    fn maximum(&self) -> Option<f64> {
        (self.n > 0).then_some(self.max)
    }
}

pub fn relative_distance_report(log: &[Assignment]) -> RelativeDistanceReport {
    // (round, ticks) in order of first appearance
    let mut order: Vec<(usize, i64)> = Vec::new();
    let mut groups: BTreeMap<(usize, i64), Vec<&Assignment>> = BTreeMap::new();
    for a in log {
        let key = (a.round, a.center_ticks);
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(a);
    }
    let mut clusters = Vec::new();
    for key in &order {
        let parts = &groups[key];
        let first = parts[0];
        let (mut rel, mut abs0) = (Acc::default(), Acc::default());
        for a in parts {
            for m in &a.members {
                match relative_distance(m.mu_before, a.center) {
                    Some(r) => rel.push(r),
                    None => abs0.push((m.mu_before - a.center).abs()),
                }
            }
        }
        clusters.push(ClusterMovement {
            round: first.round,
            center: first.center,
            center_ticks: first.center_ticks,
            cluster_index: first.cluster_index,
            omega: first.omega,
            delta: first.delta,
            members: parts.iter().map(|a| a.members.len()).sum(),
            mean_relative: rel.mean(),
            max_relative: rel.maximum(),
            mean_absolute_zero: abs0.mean(),
            max_absolute_zero: abs0.maximum(),
        });
    }
    let mut rounds: Vec<RoundMovement> = Vec::new();
    let mut round_ids: Vec<usize> = order.iter().map(|k| k.0).collect();
    round_ids.dedup();
    for r in round_ids {
        let (mut rel, mut abs0) = (Acc::default(), Acc::default());
        let mut members = 0;
        for a in log.iter().filter(|a| a.round == r) {
            members += a.members.len();
            for m in &a.members {
                match relative_distance(m.mu_before, a.center) {
                    Some(d) => rel.push(d),
                    None => abs0.push((m.mu_before - a.center).abs()),
                }
            }
        }
        rounds.push(RoundMovement {
            round: r,
            clusters: clusters.iter().filter(|c| c.round == r).count(),
            members,
            mean_relative: rel.mean(),
            max_relative: rel.maximum(),
            zero_members: abs0.n,
            mean_absolute_zero: abs0.mean(),
            max_absolute_zero: abs0.maximum(),
        });
    }
    RelativeDistanceReport { clusters, rounds }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub fraction: f64,
    pub target_fixed: usize,
    pub fixed: usize,
    pub omega: u32,
    pub delta: f64,
    pub entropy_bits: f64,
    pub unique_params: usize,
}

/// Final quality numbers and per-round diagnostics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub total_params: usize,
    pub fixed_params: usize,
    pub entropy_bits: f64,
    pub unique_params: usize,
    pub top1_point: f64,
    pub top1_ensemble: f64,
    pub ensemble_samples: usize,
    pub pretrained_top1: Option<f64>,
    pub prior_mode: String,
    pub omega_max: u32,
    pub centers_used: Vec<f64>,
    pub per_round: Vec<RoundSummary>,
    pub movement: RelativeDistanceReport,
}
