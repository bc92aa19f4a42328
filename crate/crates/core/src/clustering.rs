//! Fixing rounds: moving free weights onto shared codebook centers.
//!
//! One round repeatedly
//!
//! 1. builds the additive codebook of the current order `omega`,
//! 2. lets every free weight vote for its nearest center by `|mu - c| / sigma`,
//! 3. sorts the free weights by that distance to the winning center,
//! 4. takes the longest prefix whose mean distance is at most `delta`,
//! 5. snaps the prefix onto the center and freezes it,
//!
//! until the fixed set reaches the round's target. When the prefix is empty the
//! round escalates (`omega += 1`, `delta *= 2`) and retries. Each round starts
//! again from `omega = 1`, `delta = delta0`.
//!
//! Ties are deterministic everywhere: equal votes or equal distances to two
//! centers prefer the center of smaller magnitude, then the positive one; equal
//! distances in the sort keep ascending weight index.

use std::collections::{BTreeMap, BTreeSet};
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bayes::{GaussianWeight, SIGMA_FLOOR};
use crate::codebook::{generate_additive_set, BaseSetConfig, Codebook, DEFAULT_CENTER_CAP};
use crate::{Error, Result};

/// Fractions `p_1 < ... < p_T = 1` of weights fixed after each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FixingSchedule {
    fractions: Vec<f64>,
}

impl Default for FixingSchedule {
    fn default() -> Self {
        Self {
            fractions: vec![0.3, 0.5, 0.65, 0.775, 0.875, 0.95, 0.98, 0.99, 1.0],
        }
    }
}

impl FixingSchedule {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidConfig("fixing schedule is empty".into()));
        }
        if fractions.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidConfig("schedule fractions must lie in (0, 1]".into()));
        }
        if fractions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("schedule fractions must strictly increase".into()));
        }
        if *fractions.last().expect("non-empty") != 1.0 {
            return Err(Error::InvalidConfig("final schedule fraction must be exactly 1".into()));
        }
        Ok(Self { fractions })
    }

    pub fn rounds(&self) -> usize {
        self.fractions.len()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// `p_t` for the 1-based round `t`.
    pub fn fraction(&self, round: usize) -> f64 {
        self.fractions[round - 1]
    }
}

impl TryFrom<Vec<f64>> for FixingSchedule {
    type Error = Error;

    fn try_from(fractions: Vec<f64>) -> Result<Self> {
        Self::new(fractions)
    }
}

impl From<FixingSchedule> for Vec<f64> {
    fn from(s: FixingSchedule) -> Self {
        s.fractions
    }
}

/// `ceil(n * p)`, tolerant of the representation error in `p`.
pub fn target_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction - 1e-9).ceil().max(0.0) as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub fixed_ids: BTreeSet<usize>,
    pub free_ids: BTreeSet<usize>,
    /// Last completed round.
    pub round: usize,
}

impl Partition {
    pub fn from_weights(weights: &[GaussianWeight], round: usize) -> Self {
        let mut p = Self {
            round,
            ..Self::default()
        };
        for (i, w) in weights.iter().enumerate() {
            if w.fixed {
                p.fixed_ids.insert(i);
            } else {
                p.free_ids.insert(i);
            }
        }
        p
    }
}

/// Append-only list of centers used so far; a weight's `cluster_index` points
/// here and never changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterTable {
    pub precision_b: u32,
    pub top_j: u32,
    /// Highest codebook order reached in the run.
    pub omega_max: u32,
    /// Centers in ticks of `2^-precision_b`, in order of first use.
    pub ticks: Vec<i64>,
}

impl CenterTable {
    pub fn new(base: &BaseSetConfig) -> Self {
        Self {
            precision_b: base.precision_b,
            top_j: base.top_j,
            omega_max: 0,
            ticks: Vec::new(),
        }
    }

    pub fn base(&self) -> BaseSetConfig {
        BaseSetConfig {
            precision_b: self.precision_b,
            top_j: self.top_j,
        }
    }

    pub fn index_of(&mut self, ticks: i64) -> u32 {
        match self.ticks.iter().position(|&t| t == ticks) {
            Some(i) => i as u32,
            None => {
                self.ticks.push(ticks);
                (self.ticks.len() - 1) as u32
            }
        }
    }

    pub fn value(&self, index: u32) -> Option<f64> {
        self.ticks.get(index as usize).map(|&t| self.base().ticks_to_value(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub base: BaseSetConfig,
    pub delta0: f64,
    pub center_cap: usize,
    /// Escalations allowed within one round before giving up.
    pub max_escalations: u32,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            base: BaseSetConfig::default(),
            delta0: 1.0,
            center_cap: DEFAULT_CENTER_CAP,
            max_escalations: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub index: usize,
    pub mu_before: f64,
}

/// One center assignment: a prefix of free weights moved onto one center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub round: usize,
    pub omega: u32,
    pub delta: f64,
    pub center: f64,
    pub center_ticks: i64,
    pub cluster_index: u32,
    /// Sigma given to every member: std of their means before the snap.
    pub sigma: f64,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundState {
    pub round: usize,
    pub omega: u32,
    pub delta: f64,
    pub target_fixed: usize,
    pub assignments: Vec<Assignment>,
}

/// `|mu - c| / sigma`.
pub fn d_prob(weight: &GaussianWeight, center: f64) -> Result<f64> {
    if weight.sigma <= 0.0 {
        return Err(Error::ZeroSigma { index: None });
    }
    Ok((weight.mu - center).abs() / weight.sigma)
}

fn center_preference(a: i64, b: i64) -> Ordering {
    (a.unsigned_abs(), a < 0).cmp(&(b.unsigned_abs(), b < 0))
}

/// Index of the center with the smallest `d_prob`. Only the two centers
/// bracketing `mu` can win, so this is a binary search plus one comparison.
pub fn nearest_center(weight: &GaussianWeight, codebook: &Codebook) -> Result<usize> {
    let (below, above) = codebook.neighbours(weight.mu);
    match (below, above) {
        (Some(lo), Some(hi)) => {
            let dl = d_prob(weight, codebook.center(lo))?;
            let dh = d_prob(weight, codebook.center(hi))?;
            let pick = match dl.total_cmp(&dh) {
                Ordering::Less => lo,
                Ordering::Greater => hi,
                Ordering::Equal => match center_preference(codebook.ticks()[lo], codebook.ticks()[hi]) {
                    Ordering::Greater => hi,
                    _ => lo,
                },
            };
            Ok(pick)
        }
        (Some(k), None) | (None, Some(k)) => {
            d_prob(weight, codebook.center(k))?;
            Ok(k)
        }
        (None, None) => Err(Error::Empty("codebook")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vote {
    pub winner: usize,
    pub counts: Vec<usize>,
}

/// Counts, per center, the free weights for which it is the nearest center and
/// returns the most popular one.
pub fn vote_popular_center(weights: &[GaussianWeight], free: &[usize], codebook: &Codebook) -> Result<Vote> {
    if free.is_empty() {
        return Err(Error::NoFreeWeights);
    }
    if codebook.is_empty() {
        return Err(Error::Empty("codebook"));
    }
    let mut counts = vec![0usize; codebook.len()];
    for &i in free {
        let k = nearest_center(&weights[i], codebook).map_err(|e| with_index(e, i))?;
        counts[k] += 1;
    }
    let ticks = codebook.ticks();
    let winner = (0..counts.len())
        .max_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then_with(|| center_preference(ticks[b], ticks[a]))
        })
        .expect("non-empty codebook");
    Ok(Vote { winner, counts })
}

fn with_index(err: Error, index: usize) -> Error {
    match err {
        Error::ZeroSigma { .. } => Error::ZeroSigma { index: Some(index) },
        other => other,
    }
}

/// Free weights paired with their distance to `center`, sorted ascending by
/// distance then weight index.
pub fn order_by_distance(weights: &[GaussianWeight], free: &[usize], center: f64) -> Result<Vec<(usize, f64)>> {
    let mut out = free
        .iter()
        .map(|&i| d_prob(&weights[i], center).map(|d| (i, d)).map_err(|e| with_index(e, i)))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// Length of the longest prefix of ascending `distances` whose mean is at most
/// `delta`. On sorted input the running mean never decreases, so this is the
/// greedy prefix; every prefix is still checked so that rounding in the mean
/// cannot end the scan early.
pub fn prefix_select(distances: &[f64], delta: f64) -> usize {
    let mut sum = 0.0;
    let mut len = 0;
    for (i, &d) in distances.iter().enumerate() {
        sum += d;
        if sum / (i + 1) as f64 <= delta {
            len = i + 1;
        }
    }
    len
}

/// Population standard deviation, floored at `2^-30`.
pub fn std_of_members(mus: &[f64]) -> Result<f64> {
    if mus.is_empty() {
        return Err(Error::Empty("cluster members"));
    }
    // Welford
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &x) in mus.iter().enumerate() {
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
    }
    Ok((m2 / mus.len() as f64).sqrt().max(SIGMA_FLOOR))
}

/// Runs one fixing round until at least `ceil(N * fraction)` weights are fixed.
pub fn fix_round(
    weights: &mut [GaussianWeight],
    partition: &mut Partition,
    fraction: f64,
    cfg: &ClusterConfig,
    table: &mut CenterTable,
) -> Result<RoundState> {
    cfg.base.validate()?;
    if !(cfg.delta0 > 0.0) {
        return Err(Error::InvalidConfig("delta0 must be positive".into()));
    }
    let round = partition.round + 1;
    let target = target_count(weights.len(), fraction);
    let abort = |reason: String| Error::FixingAborted { round, reason };

    let mut codebooks: BTreeMap<u32, Codebook> = BTreeMap::new();
    // Starting half a step back makes the first pass run at (1, delta0).
    let mut omega = 0u32;
    let mut delta = cfg.delta0 / 2.0;
    let mut escalate = true;
    let mut escalations = 0u32;
    let mut assignments = Vec::new();

    while partition.fixed_ids.len() < target {
        if escalate {
            if omega > 0 {
                escalations += 1;
                if escalations > cfg.max_escalations {
                    return Err(abort(format!(
                        "no center within reach after {} escalations (omega {omega}, delta {delta})",
                        cfg.max_escalations
                    )));
                }
            }
            omega += 1;
            delta *= 2.0;
        }
        if !codebooks.contains_key(&omega) {
            let cb = generate_additive_set(&cfg.base, omega, cfg.center_cap).map_err(|e| abort(e.to_string()))?;
            codebooks.insert(omega, cb);
        }
        let codebook = &codebooks[&omega];

        let free: Vec<usize> = partition.free_ids.iter().copied().collect();
        let vote = vote_popular_center(weights, &free, codebook)?;
        let center_ticks = codebook.ticks()[vote.winner];
        let center = codebook.center(vote.winner);
        let ordered = order_by_distance(weights, &free, center)?;
        let distances: Vec<f64> = ordered.iter().map(|&(_, d)| d).collect();
        let len = prefix_select(&distances, delta);
        if len == 0 {
            escalate = true;
            continue;
        }
        escalate = false;

        let members: Vec<Member> = ordered[..len]
            .iter()
            .map(|&(index, _)| Member {
                index,
                mu_before: weights[index].mu,
            })
            .collect();
        let mus: Vec<f64> = members.iter().map(|m| m.mu_before).collect();
        let sigma = std_of_members(&mus)?;
        let cluster_index = table.index_of(center_ticks);
        table.omega_max = table.omega_max.max(omega);
        for m in &members {
            let w = &mut weights[m.index];
            w.mu = center;
            w.sigma = sigma;
            w.fixed = true;
            w.cluster_index = Some(cluster_index);
            partition.free_ids.remove(&m.index);
            partition.fixed_ids.insert(m.index);
        }
        assignments.push(Assignment {
            round,
            omega,
            delta,
            center,
            center_ticks,
            cluster_index,
            sigma,
            members,
        });
    }
    partition.round = round;
    Ok(RoundState {
        round,
        omega: omega.max(1),
        delta: if omega == 0 { cfg.delta0 } else { delta },
        target_fixed: target,
        assignments,
    })
}
