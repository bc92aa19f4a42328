//! End-to-end runs: pretrain a point network, compress it round by round,
//! evaluate and write reports.
//!
//! Random streams derived from the run seed: 0 for initialization and
//! pretraining, 1 for compression, 2 for ensemble evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bayes::{init_prior_sigma, init_uniform_sigma, WeightStore};
use crate::checkpoint::{Checkpoint, Progress, RoundRecord, Stage};
use crate::clustering::{fix_round, target_count, CenterTable, Partition};
use crate::config::{PriorMode, RunConfig};
use crate::data::Dataset;
use crate::metrics::{
    evaluate_ensemble, evaluate_point, relative_distance_report, unique_count, weight_entropy, CompressionReport,
    RoundSummary,
};
use crate::numerics::{GaussianRng, Matrix, Mlp, SgdState};
use crate::train::{bayes_optimizer, train_bayes_epoch, train_point_epoch, BayesTrainConfig};
use crate::{Error, Result};

pub const PRETRAIN_STREAM: u64 = 0;
pub const COMPRESS_STREAM: u64 = 1;
pub const ENSEMBLE_STREAM: u64 = 2;

pub fn load_data(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    cfg.dataset.load(cfg.network.input_dim(), cfg.network.output_dim())
}

/// Trains the point network for the fixed pretraining budget. The result has
/// `sigma = 0` everywhere and every weight free.
pub fn pretrain(cfg: &RunConfig) -> Result<Checkpoint> {
    cfg.validate()?;
    let (train, test) = load_data(cfg)?;
    let mut rng = GaussianRng::with_stream(cfg.seed, PRETRAIN_STREAM);
    let mut params = Mlp::init(cfg.network.clone(), &mut rng)?.params;
    let shapes: Vec<_> = params.iter().map(Matrix::shape).collect();
    let p = &cfg.pretrain;
    let mut opt = SgdState::new(&shapes, p.learning_rate, p.momentum)?;
    for _ in 0..p.epochs {
        train_point_epoch(&cfg.network, &mut params, &mut opt, &train, p.batch_size, &mut rng)?;
    }
    let mut store = WeightStore::from_point(&cfg.network, &params)?;
    store.round_to_f32();
    let point = store.mu_params();
    let train_acc = evaluate_point(&cfg.network, &point, &train)?;
    let test_acc = evaluate_point(&cfg.network, &point, &test)?;
    Ok(Checkpoint {
        store,
        table: CenterTable::new(&cfg.base_set()),
        config: cfg.clone(),
        rng: Some(rng.snapshot()),
        progress: Progress::pretrained(train_acc, test_acc),
    })
}

/// Sets the initial sigmas and switches a pretrained checkpoint to the
/// compression stage under `cfg`.
pub fn begin_compression(pretrained: &Checkpoint, cfg: &RunConfig) -> Result<Checkpoint> {
    cfg.validate()?;
    if pretrained.progress.stage != Stage::Pretrained {
        return Err(Error::InvalidConfig("compression must start from a pretrained checkpoint".into()));
    }
    if pretrained.store.spec() != &cfg.network {
        return Err(Error::InvalidConfig("checkpoint network does not match the configured network".into()));
    }
    let mut store = pretrained.store.clone();
    let quartile = match cfg.prior_mode {
        PriorMode::PowersOfTwoPrior => Some(init_prior_sigma(&mut store)),
        PriorMode::UniformPrior => {
            init_uniform_sigma(&mut store, cfg.sigma_cutoff / 2.0);
            None
        }
    };
    store.round_to_f32();
    let mut progress = pretrained.progress.clone();
    progress.stage = Stage::Compressing;
    progress.prior_quartile = quartile;
    Ok(Checkpoint {
        store,
        table: CenterTable::new(&cfg.base_set()),
        config: cfg.clone(),
        rng: Some(GaussianRng::with_stream(cfg.seed, COMPRESS_STREAM).snapshot()),
        progress,
    })
}

/// Trains and fixes one round, updating the checkpoint in place.
pub fn run_round(ck: &mut Checkpoint, train: &Dataset) -> Result<()> {
    let cfg = ck.config.clone();
    let round = ck.progress.rounds_completed + 1;
    if ck.progress.stage != Stage::Compressing || round > cfg.rounds {
        return Err(Error::InvalidConfig("no compression round left to run".into()));
    }
    let snap = ck.rng.as_ref().ok_or_else(|| Error::Checkpoint("missing rng state".into()))?;
    let mut rng = GaussianRng::restore(snap)?;
    let train_cfg = BayesTrainConfig {
        reg: cfg.reg_config(),
        batch_size: cfg.batch_size,
        sample_fixed: cfg.sample_fixed,
    };
    let mut opt = bayes_optimizer(&ck.store, cfg.learning_rate, cfg.momentum)?;
    for _ in 0..cfg.epochs_per_round {
        train_bayes_epoch(&mut ck.store, &mut opt, train, &train_cfg, &mut rng)?;
    }
    let fraction = cfg.schedule.fraction(round);
    let mut partition = Partition::from_weights(ck.store.weights(), round - 1);
    let state = fix_round(
        ck.store.weights_mut(),
        &mut partition,
        fraction,
        &cfg.cluster_config(),
        &mut ck.table,
    )?;
    ck.store.round_to_f32();
    let summary = RoundSummary {
        round,
        fraction,
        target_fixed: target_count(ck.store.len(), fraction),
        fixed: ck.store.len() - ck.store.free_count(),
        omega: state.omega,
        delta: state.delta,
        entropy_bits: weight_entropy(&ck.store),
        unique_params: unique_count(&ck.store),
    };
    ck.progress.history.push(RoundRecord {
        summary,
        assignments: state.assignments,
    });
    ck.progress.rounds_completed = round;
    if round == cfg.rounds {
        ck.progress.stage = Stage::Compressed;
    }
    ck.rng = Some(rng.snapshot());
    Ok(())
}

/// Runs the remaining rounds of a compressing checkpoint. `after_round` sees
/// the checkpoint after every round; `stop_after_round` ends early.
pub fn continue_compression(
    mut ck: Checkpoint,
    stop_after_round: Option<usize>,
    mut after_round: impl FnMut(&Checkpoint) -> Result<()>,
) -> Result<Checkpoint> {
    let (train, _) = load_data(&ck.config)?;
    while ck.progress.stage == Stage::Compressing {
        if stop_after_round.is_some_and(|s| ck.progress.rounds_completed >= s) {
            break;
        }
        run_round(&mut ck, &train)?;
        after_round(&ck)?;
    }
    Ok(ck)
}

/// Full compression of a pretrained checkpoint.
pub fn compress(pretrained: &Checkpoint, cfg: &RunConfig) -> Result<Checkpoint> {
    continue_compression(begin_compression(pretrained, cfg)?, None, |_| Ok(()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Point,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub mode: EvalMode,
    pub samples: usize,
    pub seed: u64,
    pub examples: usize,
    pub accuracy: f64,
    pub entropy_bits: f64,
    pub unique_params: usize,
    pub rounds_completed: usize,
}

pub fn evaluate(ck: &Checkpoint, data: &Dataset, mode: EvalMode, samples: usize, seed: u64) -> Result<EvalRow> {
    if data.n_features() != ck.store.spec().input_dim() {
        return Err(Error::ShapeMismatch {
            op: "evaluate",
            left: (data.len(), data.n_features()),
            right: (data.len(), ck.store.spec().input_dim()),
        });
    }
    let accuracy = match mode {
        EvalMode::Point => evaluate_point(ck.store.spec(), &ck.store.mu_params(), data)?,
        EvalMode::Ensemble => {
            let mut rng = GaussianRng::with_stream(seed, ENSEMBLE_STREAM);
            evaluate_ensemble(&ck.store, data, &mut rng, samples)?
        }
    };
    Ok(EvalRow {
        mode,
        samples: if mode == EvalMode::Point { 1 } else { samples },
        seed,
        examples: data.len(),
        accuracy,
        entropy_bits: weight_entropy(&ck.store),
        unique_params: unique_count(&ck.store),
        rounds_completed: ck.progress.rounds_completed,
    })
}

/// Summary of a checkpoint evaluated on its configured test split.
pub fn compression_report(ck: &Checkpoint) -> Result<CompressionReport> {
    if ck.progress.history.len() != ck.progress.rounds_completed {
        return Err(Error::Checkpoint("assignment log does not cover every completed round".into()));
    }
    let (_, test) = load_data(&ck.config)?;
    let samples = ck.config.ensemble_samples;
    let point = evaluate(ck, &test, EvalMode::Point, 1, ck.config.seed)?;
    let ens = evaluate(ck, &test, EvalMode::Ensemble, samples, ck.config.seed)?;
    Ok(CompressionReport {
        total_params: ck.store.len(),
        fixed_params: ck.store.len() - ck.store.free_count(),
        entropy_bits: point.entropy_bits,
        unique_params: point.unique_params,
        top1_point: point.accuracy,
        top1_ensemble: ens.accuracy,
        ensemble_samples: samples,
        pretrained_top1: ck.progress.pretrained_test_accuracy,
        prior_mode: ck.config.prior_mode.as_str().to_string(),
        omega_max: ck.table.omega_max,
        centers_used: (0..ck.table.ticks.len() as u32).filter_map(|i| ck.table.value(i)).collect(),
        per_round: ck.progress.history.iter().map(|r| r.summary.clone()).collect(),
        movement: relative_distance_report(&ck.progress.assignment_log()),
    })
}

/// Bins `sigma` by binary order of magnitude: `[2^e, 2^(e+1))`.
pub fn sigma_histogram(store: &WeightStore) -> Vec<(i32, usize, usize)> {
    let mut bins: std::collections::BTreeMap<i32, (usize, usize)> = Default::default();
    for w in store.weights() {
        let e = if w.sigma > 0.0 { w.sigma.log2().floor() as i32 } else { i32::MIN };
        let slot = bins.entry(e).or_default();
        if w.fixed {
            slot.1 += 1;
        } else {
            slot.0 += 1;
        }
    }
    bins.into_iter().map(|(e, (free, fixed))| (e, free, fixed)).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `report.json`, `rounds.csv`, `clusters.csv`, `sigma_histogram.csv`
/// and `mu_sigma.csv` into `dir`. Returns the paths written.
pub fn write_report(ck: &Checkpoint, dir: &Path) -> Result<(CompressionReport, Vec<PathBuf>)> {
    let report = compression_report(ck)?;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    written.push(path);

    let path = dir.join("rounds.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["round", "fraction", "target_fixed", "fixed", "omega", "delta", "entropy_bits", "unique_params"])?;
    for r in &report.per_round {
        w.write_record([
            r.round.to_string(),
            r.fraction.to_string(),
            r.target_fixed.to_string(),
            r.fixed.to_string(),
            r.omega.to_string(),
            r.delta.to_string(),
            r.entropy_bits.to_string(),
            r.unique_params.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("clusters.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "round",
        "center",
        "center_ticks",
        "cluster_index",
        "omega",
        "delta",
        "members",
        "mean_relative",
        "max_relative",
        "mean_absolute_zero",
        "max_absolute_zero",
    ])?;
    for c in &report.movement.clusters {
        w.write_record([
            c.round.to_string(),
            c.center.to_string(),
            c.center_ticks.to_string(),
            c.cluster_index.to_string(),
            c.omega.to_string(),
            c.delta.to_string(),
            c.members.to_string(),
            opt(c.mean_relative),
            opt(c.max_relative),
            opt(c.mean_absolute_zero),
            opt(c.max_absolute_zero),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("sigma_histogram.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["log2_lower", "lower", "upper", "free", "fixed"])?;
    for (e, free, fixed) in sigma_histogram(&ck.store) {
        let (lo, hi) = if e == i32::MIN {
            ("0".to_string(), "0".to_string())
        } else {
            (2f64.powi(e).to_string(), 2f64.powi(e + 1).to_string())
        };
        let label = if e == i32::MIN { "zero".to_string() } else { e.to_string() };
        w.write_record([label, lo, hi, free.to_string(), fixed.to_string()])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("mu_sigma.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["index", "tensor", "mu", "sigma", "fixed", "cluster_index"])?;
    for slot in ck.store.slots() {
        for i in slot.offset..slot.offset + slot.shape.len() {
            let wt = &ck.store.weights()[i];
            w.write_record([
                i.to_string(),
                slot.shape.name.clone(),
                wt.mu.to_string(),
                wt.sigma.to_string(),
                (wt.fixed as u8).to_string(),
                wt.cluster_index.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    Ok((report, written))
}
