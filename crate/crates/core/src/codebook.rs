//! Power-of-two base sets and additive power-of-two codebooks.
//!
//! All arithmetic happens on integer "ticks" of `2^-b`, so generation and
//! deduplication are exact; values are converted to `f64` only at the boundary.
//!
//! The base set at precision `b` and top exponent `j` is
//! `R = {0} ∪ {±2^-k : j <= k <= b}`, and the codebook of order `omega` holds every
//! sum of at most `omega` *distinct* elements of `R`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default refusal threshold for codebook size.
pub const DEFAULT_CENTER_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSetConfig {
    /// Smallest magnitude is `2^-precision_b`.
    pub precision_b: u32,
    /// Largest magnitude is `2^-top_j`.
    pub top_j: u32,
}

impl Default for BaseSetConfig {
    fn default() -> Self {
        Self {
            precision_b: 8,
            top_j: 0,
        }
    }
}

impl BaseSetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_j > self.precision_b {
            return Err(Error::InvalidConfig(format!(
                "top_j ({}) must not exceed precision_b ({})",
                self.top_j, self.precision_b
            )));
        }
        if self.precision_b > 52 {
            return Err(Error::InvalidConfig(format!(
                "precision_b {} exceeds the exact range of the tick ledger",
                self.precision_b
            )));
        }
        Ok(())
    }

    /// Value of one tick, `2^-b`.
    pub fn tick(&self) -> f64 {
        2f64.powi(-(self.precision_b as i32))
    }

    pub fn ticks_to_value(&self, ticks: i64) -> f64 {
        ticks as f64 * self.tick()
    }

    /// Exact tick count for `value`, if it is a multiple of `2^-b`.
    pub fn value_to_ticks(&self, value: f64) -> Option<i64> {
        if !value.is_finite() {
            return None;
        }
        let scaled = value * 2f64.powi(self.precision_b as i32);
        if scaled.fract() != 0.0 || scaled.abs() >= (1u64 << 62) as f64 {
            return None;
        }
        Some(scaled as i64)
    }

    /// Positive base magnitudes in ticks, ascending: `2^(b-k)` for `k = b..=j`.
    fn positive_ticks(&self) -> Vec<i64> {
        (self.top_j..=self.precision_b)
            .rev()
            .map(|k| 1i64 << (self.precision_b - k))
            .collect()
    }

    /// Non-zero base elements ranked by magnitude, positive before negative.
    fn ranked_ticks(&self) -> Vec<i64> {
        self.positive_ticks().into_iter().flat_map(|t| [t, -t]).collect()
    }
}

/// The sorted base set `R`, size `2(b - j + 1) + 1`.
pub fn generate_base_set(cfg: &BaseSetConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let pos = cfg.positive_ticks();
    let mut ticks: Vec<i64> = pos.iter().map(|t| -t).collect();
    ticks.push(0);
    ticks.extend(pos);
    ticks.sort_unstable();
    Ok(ticks.into_iter().map(|t| cfg.ticks_to_value(t)).collect())
}

/// An immutable, sorted, deduplicated set of cluster centers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    order_omega: u32,
    base: BaseSetConfig,
    ticks: Vec<i64>,
}

impl Codebook {
    pub fn order(&self) -> u32 {
        self.order_omega
    }

    pub fn base(&self) -> &BaseSetConfig {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn ticks(&self) -> &[i64] {
        &self.ticks
    }

    pub fn center(&self, k: usize) -> f64 {
        self.base.ticks_to_value(self.ticks[k])
    }

    pub fn centers(&self) -> Vec<f64> {
        self.ticks.iter().map(|&t| self.base.ticks_to_value(t)).collect()
    }

    pub fn contains(&self, value: f64) -> bool {
        self.base
            .value_to_ticks(value)
            .is_some_and(|t| self.ticks.binary_search(&t).is_ok())
    }

    /// Indices of the centers immediately at-or-below and above `value`
    /// (either may be missing at the ends).
    pub fn neighbours(&self, value: f64) -> (Option<usize>, Option<usize>) {
        let upper = self.ticks.partition_point(|&t| self.base.ticks_to_value(t) <= value);
        let below = upper.checked_sub(1);
        let above = (upper < self.ticks.len()).then_some(upper);
        (below, above)
    }
}

fn binomial_sum(n: u32, k_max: u32) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=k_max.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - k) as u128) / (k as u128 + 1);
    }
    total
}

/// Upper bound on `|c^omega|` without building it.
pub fn projected_size(cfg: &BaseSetConfig, omega: u32) -> u128 {
    let pos = cfg.positive_ticks();
    let nonzero = 2 * pos.len() as u32;
    let by_subsets = binomial_sum(nonzero, omega);
    let top_sum: i64 = pos.iter().rev().take(omega as usize).sum();
    let by_range = 2 * top_sum as u128 + 1;
    by_subsets.min(by_range)
}

/// All sums of at most `omega` distinct base elements.
pub fn generate_additive_set(cfg: &BaseSetConfig, omega: u32, cap: usize) -> Result<Codebook> {
    cfg.validate()?;
    if omega == 0 {
        return Err(Error::InvalidConfig("codebook order must be >= 1".into()));
    }
    let projected = projected_size(cfg, omega);
    if projected > cap as u128 {
        return Err(Error::CodebookTooLarge {
            omega,
            precision: cfg.precision_b,
            projected,
            cap,
        });
    }
    // exact[k]: sums of exactly k distinct non-zero elements
    let depth = omega as usize;
    let mut exact: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); depth + 1];
    exact[0].insert(0);
    for e in cfg.ranked_ticks() {
        for k in (1..=depth).rev() {
            let shifted: Vec<i64> = exact[k - 1].iter().map(|&s| s + e).collect();
            exact[k].extend(shifted);
        }
    }
    let all: BTreeSet<i64> = exact.into_iter().flatten().collect();
    Ok(Codebook {
        order_omega: omega,
        base: *cfg,
        ticks: all.into_iter().collect(),
    })
}

/// Whether `value` is a sum of at most `omega` distinct base elements.
///
/// Returns a witness of minimal size. Among equal-size witnesses the one whose
/// largest-magnitude element is smallest wins, recursively (colexicographic
/// order over base elements ranked by magnitude, positive first), so `0.75`
/// yields `[0.5, 0.25]` rather than `[1, -0.25]`. Zero yields the empty set.
pub fn is_representable(value: f64, cfg: &BaseSetConfig, omega: u32) -> Option<Vec<f64>> {
    cfg.validate().ok()?;
    let target = cfg.value_to_ticks(value)?;
    let ranked = cfg.ranked_ticks();
    let mut chosen = Vec::new();
    for k in 0..=(omega as usize).min(ranked.len()) {
        if colex_search(&ranked, k, ranked.len(), target, &mut chosen) {
            return Some(chosen.iter().map(|&t| cfg.ticks_to_value(t)).collect());
        }
    }
    None
}

fn colex_search(ranked: &[i64], k: usize, upper: usize, target: i64, chosen: &mut Vec<i64>) -> bool {
    if k == 0 {
        return target == 0;
    }
    for m in (k - 1)..upper {
        let e = ranked[m];
        let rest = target - e;
        let reach: i64 = ranked[..m].iter().rev().take(k - 1).map(|t| t.abs()).sum();
        if rest.abs() > reach {
            continue;
        }
        chosen.push(e);
        if colex_search(ranked, k - 1, m, rest, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}
