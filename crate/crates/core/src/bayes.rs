//! Per-weight Gaussian distributions.
//!
//! Every parameter of a [`NetworkSpec`] (biases included) becomes a
//! [`GaussianWeight`] `N(mu, sigma)`. A forward pass uses one reparameterized
//! draw `w = mu + sigma * eps` per weight, and gradients flow back to both
//! `mu` and `sigma`:
//!
//! ```text
//! d/dmu    = dL/dw
//! d/dsigma = dL/dw * eps + alpha * dL_reg/dsigma
//! ```
//!
//! The regularizer is a hinge on `sigma` with cutoff `S`:
//! `L_reg = sum over free weights of (S - sigma) when sigma < S, else 0`.

use serde::{Deserialize, Serialize};

use crate::numerics::{GaussianRng, Matrix, NetworkSpec, ParamShape};
use crate::{Error, Result};

/// Smallest admissible `sigma` once priors are set (`2^-30`).
pub const SIGMA_FLOOR: f64 = 1.0 / (1u64 << 30) as f64;
/// Largest `sigma` produced by the power-of-two prior.
pub const SIGMA_PRIOR_CEIL: f64 = 0.05;
/// Prefactor of the prior parabola, `0.05^2`.
const PRIOR_SCALE: f64 = 0.05 * 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWeight {
    pub mu: f64,
    pub sigma: f64,
    pub fixed: bool,
    /// Index into the run's center table once the weight is fixed.
    pub cluster_index: Option<u32>,
}

impl GaussianWeight {
    pub fn free(mu: f64, sigma: f64) -> Self {
        Self {
            mu,
            sigma,
            fixed: false,
            cluster_index: None,
        }
    }
}

/// Where one parameter tensor lives inside the flat weight list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSlot {
    pub shape: ParamShape,
    pub offset: usize,
}

/// All Gaussian weights of a network, flattened in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    spec: NetworkSpec,
    slots: Vec<TensorSlot>,
    weights: Vec<GaussianWeight>,
}

impl WeightStore {
    /// Wraps point weights as free Gaussians with `sigma = 0`.
    pub fn from_point(spec: &NetworkSpec, params: &[Matrix]) -> Result<Self> {
        spec.validate()?;
        let slots = Self::layout(spec);
        if slots.len() != params.len() {
            return Err(Error::RecordLength {
                expected: slots.len(),
                got: params.len(),
            });
        }
        let mut weights = Vec::with_capacity(spec.param_count());
        for (slot, p) in slots.iter().zip(params) {
            if (slot.shape.rows, slot.shape.cols) != p.shape() {
                return Err(Error::ShapeMismatch {
                    op: "weight store",
                    left: (slot.shape.rows, slot.shape.cols),
                    right: p.shape(),
                });
            }
            weights.extend(p.data().iter().map(|&mu| GaussianWeight::free(mu, 0.0)));
        }
        Ok(Self {
            spec: spec.clone(),
            slots,
            weights,
        })
    }

    pub fn from_weights(spec: &NetworkSpec, weights: Vec<GaussianWeight>) -> Result<Self> {
        spec.validate()?;
        if weights.len() != spec.param_count() {
            return Err(Error::RecordLength {
                expected: spec.param_count(),
                got: weights.len(),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            slots: Self::layout(spec),
            weights,
        })
    }

    fn layout(spec: &NetworkSpec) -> Vec<TensorSlot> {
        let mut offset = 0;
        spec.param_shapes()
            .into_iter()
            .map(|shape| {
                let slot = TensorSlot { offset, shape };
                offset += slot.shape.len();
                slot
            })
            .collect()
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn slots(&self) -> &[TensorSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[GaussianWeight] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [GaussianWeight] {
        &mut self.weights
    }

    pub fn free_count(&self) -> usize {
        self.weights.iter().filter(|w| !w.fixed).count()
    }

    fn to_params(&self, value: impl Fn(usize, &GaussianWeight) -> f64) -> Vec<Matrix> {
        self.slots
            .iter()
            .map(|slot| {
                let data = (slot.offset..slot.offset + slot.shape.len())
                    .map(|i| value(i, &self.weights[i]))
                    .collect();
                Matrix::new(slot.shape.rows, slot.shape.cols, data).expect("slot shape")
            })
            .collect()
    }

    /// The point network given by the means.
    pub fn mu_params(&self) -> Vec<Matrix> {
        self.to_params(|_, w| w.mu)
    }

    pub fn sigma_params(&self) -> Vec<Matrix> {
        self.to_params(|_, w| w.sigma)
    }

    /// Rounds free means and every sigma to `f32`. Fixed means are codebook
    /// centers and stay exact.
    pub fn round_to_f32(&mut self) {
        for w in &mut self.weights {
            if !w.fixed {
                w.mu = w.mu as f32 as f64;
            }
            w.sigma = w.sigma as f32 as f64;
        }
    }
}

/// The `eps` used for each weight in one forward sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    pub eps: Vec<f64>,
}

/// Draws one `eps` per weight and returns `w = mu + sigma * eps` as network
/// parameters. When `sample_fixed` is false, fixed weights use `eps = 0`.
pub fn sample_weights(store: &WeightStore, rng: &mut GaussianRng, sample_fixed: bool) -> (Vec<Matrix>, NoiseRecord) {
    let mut eps = rng.gaussian_draw(store.len());
    if !sample_fixed {
        for (e, w) in eps.iter_mut().zip(store.weights()) {
            if w.fixed {
                *e = 0.0;
            }
        }
    }
    let params = sample_with_noise(store, &eps).expect("noise drawn for every weight");
    (params, NoiseRecord { eps })
}

/// `w_i = mu_i + sigma_i * eps_i` for a given noise vector.
pub fn sample_with_noise(store: &WeightStore, eps: &[f64]) -> Result<Vec<Matrix>> {
    if eps.len() != store.len() {
        return Err(Error::RecordLength {
            expected: store.len(),
            got: eps.len(),
        });
    }
    Ok(store.to_params(|i, w| w.mu + w.sigma * eps[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    pub alpha: f64,
    /// The hinge cutoff `S`.
    pub cutoff: f64,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0 / 2048.0,
            cutoff: 0.05,
        }
    }
}

pub fn reg_loss(store: &WeightStore, cfg: &RegConfig) -> f64 {
    store
        .weights()
        .iter()
        .filter(|w| !w.fixed && w.sigma < cfg.cutoff)
        .map(|w| cfg.cutoff - w.sigma)
        .sum()
}

/// `dL_reg/dsigma`: `-1` for free weights below the cutoff, else `0`.
pub fn reg_grad(store: &WeightStore, cfg: &RegConfig) -> Vec<f64> {
    store
        .weights()
        .iter()
        .map(|w| if !w.fixed && w.sigma < cfg.cutoff { -1.0 } else { 0.0 })
        .collect()
}

pub fn training_loss(data_loss: f64, store: &WeightStore, cfg: &RegConfig) -> f64 {
    data_loss + cfg.alpha * reg_loss(store, cfg)
}

/// Combines `dL/dw` from a sampled forward pass with the regularizer into
/// `(grad_mu, grad_sigma)`. Fixed weights get exactly zero.
pub fn assemble_gradients(
    store: &WeightStore,
    grad_w: &[f64],
    noise: &NoiseRecord,
    cfg: &RegConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = store.len();
    for len in [grad_w.len(), noise.eps.len()] {
        if len != n {
            return Err(Error::RecordLength { expected: n, got: len });
        }
    }
    let reg = reg_grad(store, cfg);
    let mut grad_mu = Vec::with_capacity(n);
    let mut grad_sigma = Vec::with_capacity(n);
    for (i, w) in store.weights().iter().enumerate() {
        if w.fixed {
            grad_mu.push(0.0);
            grad_sigma.push(0.0);
        } else {
            grad_mu.push(grad_w[i]);
            grad_sigma.push(grad_w[i] * noise.eps[i] + cfg.alpha * reg[i]);
        }
    }
    Ok((grad_mu, grad_sigma))
}

/// Bracketing powers of two `2^x <= |mu| < 2^(x+1)`; `None` for zero or
/// non-finite input.
pub fn power_of_two_bracket(mu: f64) -> Option<(f64, f64)> {
    let a = mu.abs();
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let mut x = a.log2().floor() as i32;
    while 2f64.powi(x) > a {
        x -= 1;
    }
    while 2f64.powi(x + 1) <= a {
        x += 1;
    }
    Some((2f64.powi(x), 2f64.powi(x + 1)))
}

/// Relative distances `(|mu - 2^x| / 2^x, |mu - 2^(x+1)| / 2^(x+1))` of `|mu|`
/// to its lower and upper bracketing powers of two.
pub fn relative_distances(mu: f64) -> Option<(f64, f64)> {
    let (lo, hi) = power_of_two_bracket(mu)?;
    let a = mu.abs();
    Some(((a - lo).abs() / lo, (hi - a).abs() / hi))
}

/// The prior parabola before quartile reweighting and clamping:
/// `0.05^2 * d_rel(lower) * d_rel(upper)`. Zero for `mu = 0`.
pub fn prior_sigma_raw(mu: f64) -> f64 {
    match relative_distances(mu) {
        Some((down, up)) => PRIOR_SCALE * down * up,
        None => 0.0,
    }
}

/// Linear-interpolation quantile of already sorted values.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Sets every free weight's `sigma` from its `mu`: the prior parabola divided
/// by the third quartile of the upper relative distances over free non-zero
/// weights, clamped to `[2^-30, 0.05]`. Returns the quartile used.
pub fn init_prior_sigma(store: &mut WeightStore) -> f64 {
    let mut uppers: Vec<f64> = store
        .weights()
        .iter()
        .filter(|w| !w.fixed)
        .filter_map(|w| relative_distances(w.mu).map(|(_, up)| up))
        .collect();
    uppers.sort_by(f64::total_cmp);
    let q75 = if uppers.is_empty() {
        0.0
    } else {
        sorted_quantile(&uppers, 0.75)
    };
    for w in store.weights_mut().iter_mut().filter(|w| !w.fixed) {
        let raw = prior_sigma_raw(w.mu);
        let scaled = if q75 > 0.0 { raw / q75 } else { raw };
        w.sigma = scaled.clamp(SIGMA_FLOOR, SIGMA_PRIOR_CEIL);
    }
    q75
}

/// Constant `sigma` for every free weight (the no-prior ablation).
pub fn init_uniform_sigma(store: &mut WeightStore, sigma: f64) {
    for w in store.weights_mut().iter_mut().filter(|w| !w.fixed) {
        w.sigma = sigma.max(SIGMA_FLOOR);
    }
}
