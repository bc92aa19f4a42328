//! Epoch loops for point pretraining and Gaussian-weight training.

use crate::bayes::{assemble_gradients, sample_weights, training_loss, RegConfig, WeightStore, SIGMA_FLOOR};
use crate::data::Dataset;
use crate::numerics::{GaussianRng, Matrix, NetworkSpec, SgdState};
use crate::{Error, Result};

/// Shuffled minibatch index lists covering the dataset once.
pub fn minibatches(n: usize, batch_size: usize, rng: &mut GaussianRng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

fn check_finite(loss: f64, what: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} loss is {loss}")))
    }
}

/// One epoch of plain SGD on a point network. Returns the mean batch loss.
pub fn train_point_epoch(
    spec: &NetworkSpec,
    params: &mut [Matrix],
    opt: &mut SgdState,
    data: &Dataset,
    batch_size: usize,
    rng: &mut GaussianRng,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let batches = minibatches(data.len(), batch_size, rng);
    let mut total = 0.0;
    for idx in &batches {
        let (x, y) = data.batch(idx);
        let (loss, grads) = spec.loss_and_grads(params, &x, &y)?;
        check_finite(loss, "pretraining")?;
        opt.update(params, &grads)?;
        total += loss;
    }
    Ok(total / batches.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesTrainConfig {
    pub reg: RegConfig,
    pub batch_size: usize,
    pub sample_fixed: bool,
}

/// Optimizer over the flattened `mu` and `sigma` vectors of a store.
pub fn bayes_optimizer(store: &WeightStore, learning_rate: f64, momentum: f64) -> Result<SgdState> {
    SgdState::new(&[(1, store.len()), (1, store.len())], learning_rate, momentum)
}

/// One minibatch step on `data_loss + alpha * L_reg` with a fresh weight sample.
/// Only free weights move. A sigma stepped below zero is reflected (the sample
/// distribution only depends on `|sigma|`), then floored at `2^-30`.
pub fn bayes_step(
    store: &mut WeightStore,
    opt: &mut SgdState,
    x: &Matrix,
    y: &[usize],
    cfg: &BayesTrainConfig,
    rng: &mut GaussianRng,
) -> Result<f64> {
    let (params, noise) = sample_weights(store, rng, cfg.sample_fixed);
    let spec = store.spec().clone();
    let (data_loss, grads) = spec.loss_and_grads(&params, x, y)?;
    let loss = training_loss(data_loss, store, &cfg.reg);
    check_finite(loss, "training")?;
    let grad_w: Vec<f64> = grads.into_iter().flat_map(Matrix::into_data).collect();
    let (g_mu, g_sigma) = assemble_gradients(store, &grad_w, &noise, &cfg.reg)?;
    let n = store.len();
    let mut values = vec![
        Matrix::new(1, n, store.weights().iter().map(|w| w.mu).collect())?,
        Matrix::new(1, n, store.weights().iter().map(|w| w.sigma).collect())?,
    ];
    let grads = [Matrix::new(1, n, g_mu)?, Matrix::new(1, n, g_sigma)?];
    opt.update(&mut values, &grads)?;
    for ((w, &mu), &sigma) in store.weights_mut().iter_mut().zip(values[0].data()).zip(values[1].data()) {
        if w.fixed {
            continue;
        }
        if !(mu.is_finite() && sigma.is_finite()) {
            return Err(Error::NonFinite("parameter update produced a non-finite value".into()));
        }
        w.mu = mu;
        w.sigma = sigma.abs().max(SIGMA_FLOOR);
    }
    Ok(loss)
}

/// One epoch of Gaussian-weight training. Returns the mean batch loss.
pub fn train_bayes_epoch(
    store: &mut WeightStore,
    opt: &mut SgdState,
    data: &Dataset,
    cfg: &BayesTrainConfig,
    rng: &mut GaussianRng,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let batches = minibatches(data.len(), cfg.batch_size, rng);
    let mut total = 0.0;
    for idx in &batches {
        let (x, y) = data.batch(idx);
        total += bayes_step(store, opt, &x, &y, cfg, rng)?;
    }
    Ok(total / batches.len() as f64)
}
