//! Seeded generator for all stochastic draws in a run.
//!
//! The bit source is ChaCha8 (`rand_chacha::ChaCha8Rng`), a portable counter-based
//! generator whose output is specified independently of platform. Standard normals
//! use the Box–Muller transform, cosine branch only, on two 53-bit uniforms:
//!
//! ```text
//! u1 = 1 - (next_u64 >> 11) * 2^-53        in (0, 1]
//! u2 =     (next_u64 >> 11) * 2^-53        in [0, 1)
//! z  = sqrt(-2 ln u1) * cos(2 pi u2)
//! ```
//!
//! Each normal consumes exactly two 64-bit words, so the generator position is a
//! pure function of the number of draws and a snapshot is just the ChaCha seed,
//! stream and word position.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianRng {
    inner: ChaCha8Rng,
}

/// Serializable generator state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSnapshot {
    /// 32-byte ChaCha key, hex encoded.
    pub key: String,
    pub stream: u64,
    /// Word position, decimal encoded (it is a u128).
    pub word_pos: String,
}

impl GaussianRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Same seed on an independent stream.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_MINUS_53
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn gaussian_draw(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }

    /// Fisher–Yates shuffle with an unbiased bounded draw.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    // Rejection sampling on the top of the u64 range.
    fn below(&mut self, n: u64) -> u64 {
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn snapshot(&self) -> RngSnapshot {
        RngSnapshot {
            key: hex::encode(self.inner.get_seed()),
            stream: self.inner.get_stream(),
            word_pos: self.inner.get_word_pos().to_string(),
        }
    }

    pub fn restore(snap: &RngSnapshot) -> Result<Self> {
        let bytes = hex::decode(&snap.key).map_err(|e| Error::Checkpoint(format!("rng key: {e}")))?;
        let key: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Checkpoint("rng key must be 32 bytes".into()))?;
        let pos: u128 = snap
            .word_pos
            .parse()
            .map_err(|e| Error::Checkpoint(format!("rng word position: {e}")))?;
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(snap.stream);
        inner.set_word_pos(pos);
        Ok(Self { inner })
    }
}
