//! Probabilistic weight fixing for small dense networks.
//!
//! Every weight of a pre-trained multilayer perceptron is turned into a Gaussian
//! `N(mu, sigma)`. The Gaussians are trained with reparameterized gradients and a
//! hinge regularizer that keeps `sigma` from collapsing, and the learned `sigma`
//! then drives an iterative clustering stage that snaps weights onto a shared
//! codebook of additive powers-of-two. The result is a network with very few
//! distinct weight values and a low weight-space entropy.
//!
//! Module map:
//!
//! - [`numerics`]: matrices, affine/ReLU layers, softmax cross-entropy, SGD with
//!   momentum and the seeded Gaussian generator.
//! - [`bayes`]: the Gaussian weight store, sampling, regularizer and prior `sigma`.
//! - [`codebook`]: power-of-two base sets and additive sets of any order.
//! - [`clustering`]: the fixing rounds that move weights from free to fixed.
//! - [`metrics`]: entropy, unique counts, accuracy and relative-distance stats.
//! - [`pipeline`], [`config`], [`checkpoint`], [`data`]: the end-to-end run.

pub mod bayes;
pub mod checkpoint;
pub mod clustering;
pub mod codebook;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod train;

pub use error::{Error, Result};
