//! Deterministic dense-network training core.
//!
//! Everything here is `f64` and free of hidden global state. The only source of
//! randomness is [`GaussianRng`], which the caller owns and threads through.

mod layers;
mod loss;
mod matrix;
mod mlp;
mod rng;
mod sgd;

pub use layers::{affine_backward, affine_forward, relu_backward, relu_forward, AffineGrads};
pub use loss::{argmax, softmax_cross_entropy, softmax_rows};
pub use matrix::Matrix;
pub use mlp::{Activation, ForwardCache, Mlp, NetworkSpec, ParamShape};
pub use rng::{GaussianRng, RngSnapshot};
pub use sgd::SgdState;
