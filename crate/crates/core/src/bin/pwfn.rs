use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pwfn::checkpoint::{Checkpoint, Stage};
use pwfn::config::RunConfig;
use pwfn::pipeline::{self, EvalMode};

#[derive(Parser)]
#[command(name = "pwfn", version, about = "Probabilistic weight fixing for small dense networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config field, e.g. `--set rounds=3 --set dataset.n_train=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the point network and write `pretrained.pwfn`.
    Pretrain(Common),
    /// Compress a pretrained checkpoint; writes one checkpoint per round.
    Compress {
        #[command(flatten)]
        common: Common,
        /// Pretrained checkpoint to start from.
        #[arg(long, required_unless_present = "resume")]
        checkpoint: Option<PathBuf>,
        /// Continue a partially compressed checkpoint with its stored config.
        #[arg(long, conflicts_with = "checkpoint")]
        resume: Option<PathBuf>,
        #[arg(long)]
        stop_after_round: Option<usize>,
    },
    /// Accuracy of a checkpoint on its configured test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "point")]
        mode: Mode,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Write the JSON summary and CSV tables for a checkpoint.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Point,
    Ensemble,
}

fn build_config(common: &Common, base: Option<RunConfig>) -> pwfn::Result<RunConfig> {
    let mut cfg = match (&common.config, base) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(cfg)) => cfg,
        (None, None) => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.with_overrides(&common.overrides)
}

fn load(path: &Path) -> anyhow::Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))
}

fn save(ck: &Checkpoint, path: &Path) -> anyhow::Result<()> {
    ck.save(path).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Pretrain(common) => {
            let cfg = build_config(&common, None)?;
            std::fs::create_dir_all(&common.out)?;
            let ck = pipeline::pretrain(&cfg)?;
            save(&ck, &common.out.join("pretrained.pwfn"))?;
            println!(
                "{}",
                serde_json::json!({
                    "train_accuracy": ck.progress.pretrained_train_accuracy,
                    "test_accuracy": ck.progress.pretrained_test_accuracy,
                })
            );
        }
        Command::Compress {
            common,
            checkpoint,
            resume,
            stop_after_round,
        } => {
            std::fs::create_dir_all(&common.out)?;
            let start = match (checkpoint, resume) {
                (Some(path), _) => {
                    let pre = load(&path)?;
                    let cfg = build_config(&common, Some(pre.config.clone()))?;
                    pipeline::begin_compression(&pre, &cfg)?
                }
                (None, Some(path)) => {
                    let ck = load(&path)?;
                    if ck.progress.stage != Stage::Compressing {
                        bail!("{} has no compression rounds left", path.display());
                    }
                    ck
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let out = common.out.clone();
            let done = pipeline::continue_compression(start, stop_after_round, |ck| {
                let path = out.join(format!("round_{:02}.pwfn", ck.progress.rounds_completed));
                ck.save(&path)?;
                eprintln!("wrote {}", path.display());
                Ok(())
            })?;
            if done.progress.stage == Stage::Compressed {
                save(&done, &common.out.join("compressed.pwfn"))?;
                let (report, _) = pipeline::write_report(&done, &common.out)?;
                println!("{}", serde_json::to_string(&report)?);
            }
        }
        Command::Evaluate {
            common,
            checkpoint,
            mode,
            samples,
        } => {
            let ck = load(&checkpoint)?;
            let cfg = build_config(&common, Some(ck.config.clone()))?;
            let (_, test) = pipeline::load_data(&cfg)?;
            let mode = match mode {
                Mode::Point => EvalMode::Point,
                Mode::Ensemble => EvalMode::Ensemble,
            };
            let samples = samples.unwrap_or(cfg.ensemble_samples);
            let row = pipeline::evaluate(&ck, &test, mode, samples, cfg.seed)?;
            let line = serde_json::to_string(&row)?;
            std::fs::create_dir_all(&common.out)?;
            std::fs::write(common.out.join("evaluation.json"), &line)?;
            println!("{line}");
        }
        Command::Report { common, checkpoint } => {
            let ck = load(&checkpoint)?;
            let (report, files) = pipeline::write_report(&ck, &common.out)?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<pwfn::Error>() {
                Some(e) if e.is_config() => ExitCode::from(2),
                Some(e) if e.is_numerical() => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
