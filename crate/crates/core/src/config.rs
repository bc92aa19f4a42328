//! Run configuration: JSON document with defaults and `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bayes::RegConfig;
use crate::clustering::{ClusterConfig, FixingSchedule};
use crate::codebook::{BaseSetConfig, DEFAULT_CENTER_CAP};
use crate::data::DatasetSpec;
use crate::numerics::NetworkSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    #[default]
    PowersOfTwoPrior,
    UniformPrior,
}

impl PriorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PriorMode::PowersOfTwoPrior => "powers_of_two_prior",
            PriorMode::UniformPrior => "uniform_prior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub precision_b: u32,
    pub top_j: u32,
    /// Refuse to build codebooks larger than this.
    pub center_cap: usize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            precision_b: 8,
            top_j: 0,
            center_cap: DEFAULT_CENTER_CAP,
        }
    }
}

/// Point-network training before compression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSpec,
    pub dataset: DatasetSpec,
    pub rounds: usize,
    pub epochs_per_round: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub alpha: f64,
    pub delta0: f64,
    pub sigma_cutoff: f64,
    pub codebook: CodebookConfig,
    pub schedule: FixingSchedule,
    pub seed: u64,
    pub prior_mode: PriorMode,
    /// Also perturb fixed weights during training forward passes.
    pub sample_fixed: bool,
    pub ensemble_samples: usize,
    /// Codebook escalations allowed per fixing round.
    pub max_escalations: u32,
    pub pretrain: PretrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: NetworkSpec::default(),
            dataset: DatasetSpec::default(),
            rounds: 9,
            epochs_per_round: 3,
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 128,
            alpha: 1.0 / 2048.0,
            delta0: 1.0,
            sigma_cutoff: 0.05,
            codebook: CodebookConfig::default(),
            schedule: FixingSchedule::default(),
            seed: 0,
            prior_mode: PriorMode::default(),
            sample_fixed: true,
            ensemble_samples: 20,
            max_escalations: 64,
            pretrain: PretrainConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.base_set().validate()?;
        if self.rounds != self.schedule.rounds() {
            return Err(invalid(format!(
                "rounds = {} but the schedule has {} fractions",
                self.rounds,
                self.schedule.rounds()
            )));
        }
        if self.batch_size == 0 || self.pretrain.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        for (name, lr) in [("learning_rate", self.learning_rate), ("pretrain.learning_rate", self.pretrain.learning_rate)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        for (name, m) in [("momentum", self.momentum), ("pretrain.momentum", self.pretrain.momentum)] {
            if !(0.0..1.0).contains(&m) {
                return Err(invalid(format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha must be non-negative"));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(invalid("delta0 must be positive"));
        }
        if !(self.sigma_cutoff > 0.0 && self.sigma_cutoff.is_finite()) {
            return Err(invalid("sigma_cutoff must be positive"));
        }
        if self.ensemble_samples == 0 {
            return Err(invalid("ensemble_samples must be at least 1"));
        }
        Ok(())
    }

    /// Applies `key=value`, where `key` is a dotted path into the JSON form
    /// and `value` is parsed as JSON, falling back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| invalid(format!("override `{assignment}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut doc = serde_json::to_value(&*self)?;
        let mut node = &mut doc;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| invalid(format!("`{key}`: `{part}` is not inside an object")))?;
            if i + 1 == parts.len() {
                if !obj.contains_key(*part) {
                    return Err(invalid(format!("unknown config key `{key}`")));
                }
                obj.insert(part.to_string(), value);
                break;
            }
            node = obj
                .get_mut(*part)
                .ok_or_else(|| invalid(format!("unknown config key `{key}`")))?;
        }
        *self = serde_json::from_value(doc).map_err(|e| invalid(format!("override `{key}`: {e}")))?;
        Ok(())
    }

    /// Applies overrides in order, then validates.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self> {
        for o in overrides {
            self.apply_override(o.as_ref())?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn base_set(&self) -> BaseSetConfig {
        BaseSetConfig {
            precision_b: self.codebook.precision_b,
            top_j: self.codebook.top_j,
        }
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            base: self.base_set(),
            delta0: self.delta0,
            center_cap: self.codebook.center_cap,
            max_escalations: self.max_escalations,
        }
    }

    pub fn reg_config(&self) -> RegConfig {
        RegConfig {
            alpha: self.alpha,
            cutoff: self.sigma_cutoff,
        }
    }
}
