//! Binary checkpoints.
//!
//! ```text
//! b"PWFN" | version: u32 LE | header_len: u64 LE | header (UTF-8 JSON) | tensor bytes
//! ```
//!
//! The header lists the tensors in storage order. Each tensor contributes, in
//! the order given by `layout`, its `mu` (f32 LE), `sigma` (f32 LE),
//! `fixed_mask` (u8, 0 or 1) and `cluster_index` (u32 LE, `u32::MAX` for free
//! weights) arrays, each in row-major order.
//!
//! Fixed means are not trusted from the f32 array on load: they are rebuilt
//! exactly from the center table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bayes::{GaussianWeight, WeightStore};
use crate::clustering::{Assignment, CenterTable};
use crate::config::RunConfig;
use crate::metrics::RoundSummary;
use crate::numerics::{NetworkSpec, RngSnapshot};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PWFN";
pub const VERSION: u32 = 1;
pub const FREE_CLUSTER: u32 = u32::MAX;
const LAYOUT: [&str; 4] = ["mu", "sigma", "fixed_mask", "cluster_index"];
// Header sanity bound (256 MiB).
const MAX_HEADER: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pretrained,
    Compressing,
    Compressed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub summary: RoundSummary,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub stage: Stage,
    pub rounds_completed: usize,
    pub pretrained_train_accuracy: Option<f64>,
    pub pretrained_test_accuracy: Option<f64>,
    /// Quartile used by the sigma prior, once compression started.
    pub prior_quartile: Option<f64>,
    pub history: Vec<RoundRecord>,
}

impl Progress {
    pub fn pretrained(train_accuracy: f64, test_accuracy: f64) -> Self {
        Self {
            stage: Stage::Pretrained,
            rounds_completed: 0,
            pretrained_train_accuracy: Some(train_accuracy),
            pretrained_test_accuracy: Some(test_accuracy),
            prior_quartile: None,
            history: Vec::new(),
        }
    }

    /// Every assignment made so far, in order.
    pub fn assignment_log(&self) -> Vec<Assignment> {
        self.history.iter().flat_map(|r| r.assignments.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub store: WeightStore,
    pub table: CenterTable,
    pub config: RunConfig,
    pub rng: Option<RngSnapshot>,
    pub progress: Progress,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    network: NetworkSpec,
    layout: Vec<String>,
    tensors: Vec<TensorEntry>,
    codebook: CenterTable,
    config: RunConfig,
    rng: Option<RngSnapshot>,
    progress: Progress,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| bad("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let spec = self.store.spec();
        let header = Header {
            network: spec.clone(),
            layout: LAYOUT.iter().map(|s| s.to_string()).collect(),
            tensors: self
                .store
                .slots()
                .iter()
                .map(|s| TensorEntry {
                    name: s.shape.name.clone(),
                    rows: s.shape.rows,
                    cols: s.shape.cols,
                })
                .collect(),
            codebook: self.table.clone(),
            config: self.config.clone(),
            rng: self.rng.clone(),
            progress: self.progress.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + self.store.len() * 13);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        let weights = self.store.weights();
        for slot in self.store.slots() {
            let ws = &weights[slot.offset..slot.offset + slot.shape.len()];
            for w in ws {
                out.extend_from_slice(&(w.mu as f32).to_le_bytes());
            }
            for w in ws {
                out.extend_from_slice(&(w.sigma as f32).to_le_bytes());
            }
            for w in ws {
                out.push(w.fixed as u8);
            }
            for w in ws {
                let idx = match (w.fixed, w.cluster_index) {
                    (true, Some(i)) => i,
                    (true, None) => return Err(bad("fixed weight without a cluster index")),
                    (false, _) => FREE_CLUSTER,
                };
                out.extend_from_slice(&idx.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let version = u32::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let header_len = u64::from_le_bytes(r.array()?);
        if header_len > MAX_HEADER {
            return Err(bad("header too large"));
        }
        let header: Header = serde_json::from_slice(r.take(header_len as usize)?)
            .map_err(|e| bad(format!("header: {e}")))?;
        if header.layout != LAYOUT {
            return Err(bad(format!("unsupported tensor layout {:?}", header.layout)));
        }
        header.network.validate()?;
        let shapes = header.network.param_shapes();
        if shapes.len() != header.tensors.len() {
            return Err(bad("tensor list does not match the network"));
        }
        let base = header.codebook.base();
        base.validate()?;
        let mut weights = Vec::with_capacity(header.network.param_count());
        for (shape, t) in shapes.iter().zip(&header.tensors) {
            if (shape.name.as_str(), shape.rows, shape.cols) != (t.name.as_str(), t.rows, t.cols) {
                return Err(bad(format!("tensor {} does not match the network", t.name)));
            }
            let n = t.rows * t.cols;
            let mu: Vec<f32> = (0..n).map(|_| r.array().map(f32::from_le_bytes)).collect::<Result<_>>()?;
            let sigma: Vec<f32> = (0..n).map(|_| r.array().map(f32::from_le_bytes)).collect::<Result<_>>()?;
            let fixed = r.take(n)?.to_vec();
            let cluster: Vec<u32> = (0..n).map(|_| r.array().map(u32::from_le_bytes)).collect::<Result<_>>()?;
            for i in 0..n {
                let w = match (fixed[i], cluster[i]) {
                    (0, FREE_CLUSTER) => GaussianWeight::free(mu[i] as f64, sigma[i] as f64),
                    (1, idx) if idx != FREE_CLUSTER => GaussianWeight {
                        mu: header
                            .codebook
                            .value(idx)
                            .ok_or_else(|| bad(format!("cluster index {idx} outside the center table")))?,
                        sigma: sigma[i] as f64,
                        fixed: true,
                        cluster_index: Some(idx),
                    },
                    (f, c) => return Err(bad(format!("{}: inconsistent fixed mask {f} / cluster {c}", t.name))),
                };
                weights.push(w);
            }
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes after tensor data"));
        }
        Ok(Self {
            store: WeightStore::from_weights(&header.network, weights)?,
            table: header.codebook,
            config: header.config,
            rng: header.rng,
            progress: header.progress,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
