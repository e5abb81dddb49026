//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::synthetic::{synthetic_records, SyntheticSpec};
use crate::dataset::{build_from_records, save_cache, write_stats_csv, Partition, StatsRow, Subset};
use crate::eval::{evaluate_dataset, write_reports_csv, write_reports_json};
use crate::ingest::Manifest;
use crate::run::{ingest_all, load_partition, run_experiment, write_summary, ExperimentId, RunConfig, RunError};
use crate::train::{load_checkpoint, save_checkpoint, train_observed, transfer_observed, EpochRecord};

/// Environment variable that overrides `[data] root`.
pub const DATA_ROOT_ENV: &str = "HEARTBEAT_DATA_ROOT";

#[derive(Debug, Parser)]
#[command(name = "heartbeat", version, about = "Heart beat detection in ECG segments with a 1-D CNN")]
pub struct Cli {
    /// Run configuration (key = value sections); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `[train] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset subset, e.g. "NormalSinus+LongTerm" or "arrhythmia".
    #[arg(long)]
    pub subset: Option<Subset>,
    /// Partition: train or test.
    #[arg(long)]
    pub partition: Option<Partition>,
    /// Directory with dataset caches; overrides `[data] cache_dir`.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build train/test caches for every subset in the manifest, plus stats.csv.
    Ingest {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output cache directory; overrides `[data] cache_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the caches of one subset, from the manifest or synthetic records.
    BuildDataset {
        #[arg(long)]
        subset: Option<Subset>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Generate synthetic ECG records instead of reading the manifest.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 6)]
        synthetic_subjects: usize,
        #[arg(long, default_value_t = 12.5)]
        synthetic_seconds: f64,
    },
    /// Train a network from scratch on one partition.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrain the fully connected part of a checkpoint on one partition.
    Transfer {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on one partition.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run experiment 1, 2 or 3 into OUT/experimentN.
    Experiment {
        id: ExperimentId,
        #[arg(long)]
        out: PathBuf,
        /// Source model for experiments 2 and 3 (default OUT/experiment1/model.hbdl).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Merge experiment outputs into summary.md and summary.csv.
    Report {
        /// Directories to scan for experiment outputs and stats.csv files.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(RunError),
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(e) => e.exit_code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(root) = std::env::var_os(DATA_ROOT_ENV) {
        cfg.data.root = PathBuf::from(root);
    }
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

fn print_epoch(e: &EpochRecord) {
    eprintln!(
        "epoch {:>3}  loss {:.5}  train MCC {:.4}  {:.1}s",
        e.epoch, e.mean_loss, e.train_mcc, e.seconds
    );
}

fn apply_cache_dir(cfg: &mut RunConfig, dir: &Option<PathBuf>) {
    // command-line paths are relative to the working directory, not the data root
    if let Some(d) = dir {
        cfg.data.cache_dir = std::path::absolute(d).unwrap_or_else(|_| d.clone());
    }
}

fn manifest_for(cfg: &RunConfig, manifest: &Option<PathBuf>) -> Result<Manifest, RunError> {
    let path = manifest.clone().unwrap_or_else(|| cfg.data.manifest_path());
    let root = std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from);
    Ok(Manifest::load(&path, root.as_deref())?)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest { manifest, out } => {
            apply_cache_dir(&mut cfg, &out);
            let m = manifest_for(&cfg, &manifest)?;
            let rows = ingest_all(&cfg, &m, &Subset::ALL)?;
            if rows.is_empty() {
                return Err(CliError::Usage("manifest contains no records of any known subset".into()));
            }
            for r in &rows {
                println!(
                    "{}\t{}\t{} subjects\t{} segments\t{:.2}% BEAT",
                    r.subset, r.partition, r.n_subjects, r.n_segments, r.percent_beat
                );
            }
            println!("caches written to {}", cfg.data.cache_path().display());
        }
        Command::BuildDataset {
            subset,
            manifest,
            out,
            synthetic,
            synthetic_subjects,
            synthetic_seconds,
        } => {
            apply_cache_dir(&mut cfg, &out);
            let subset = subset.unwrap_or(cfg.experiment.source);
            let dir = cfg.data.cache_path();
            create_dir(&dir)?;
            let build = if synthetic {
                let spec = SyntheticSpec {
                    n_subjects: synthetic_subjects,
                    duration_s: synthetic_seconds,
                    seed: cli.seed.unwrap_or(SyntheticSpec::default().seed),
                    tag: subset.tags()[0],
                    ..SyntheticSpec::default()
                };
                let records = synthetic_records(&spec);
                build_from_records(subset.name(), &records, &cfg.data.build_options()).map_err(RunError::from)?
            } else {
                let m = manifest_for(&cfg, &manifest)?;
                crate::dataset::build_subset(subset, &m, &cfg.data.build_options()).map_err(RunError::from)?
            };
            let mut rows = Vec::new();
            for p in [Partition::Train, Partition::Test] {
                let path = subset.cache_path(&dir, p);
                save_cache(build.partition(p), &path).map_err(RunError::from)?;
                let row = StatsRow::of(build.partition(p));
                println!(
                    "{}\t{} subjects\t{} segments\t{:.2}% BEAT\t{}",
                    p,
                    row.n_subjects,
                    row.n_segments,
                    row.percent_beat,
                    path.display()
                );
                rows.push(row);
            }
            let stats = dir.join(format!("stats-{}.csv", subset.slug()));
            write_stats_csv(&stats, &rows).map_err(RunError::from)?;
        }
        Command::Train { data, out } => {
            apply_cache_dir(&mut cfg, &data.cache_dir);
            let subset = data.subset.unwrap_or(cfg.experiment.source);
            let (ds, _) = load_partition(&cfg.data.cache_path(), subset, data.partition.unwrap_or(Partition::Train))?;
            create_dir(&out)?;
            let (params, history) =
                train_observed::<f32>(&ds, &cfg.train, None, &mut print_epoch).map_err(RunError::from)?;
            save_checkpoint(&params, &cfg.train.network, &out.join("model.hbdl")).map_err(RunError::from)?;
            history.write_csv(&out.join("training_log.csv")).map_err(RunError::from)?;
            fs::write(out.join("config.ini"), cfg.to_ini()).map_err(|e| RunError::io(&out, e))?;
            println!("{}", out.join("model.hbdl").display());
        }
        Command::Transfer { data, checkpoint, out } => {
            apply_cache_dir(&mut cfg, &data.cache_dir);
            let subset = data
                .subset
                .ok_or_else(|| CliError::Usage("transfer needs --subset".into()))?;
            let (ds, _) = load_partition(&cfg.data.cache_path(), subset, data.partition.unwrap_or(Partition::Train))?;
            if !checkpoint.is_file() {
                return Err(RunError::MissingCheckpoint(checkpoint).into());
            }
            let (base, base_net) = load_checkpoint::<f32>(&checkpoint).map_err(RunError::from)?;
            create_dir(&out)?;
            let (params, history) =
                transfer_observed(&base, &base_net, &ds, &cfg.train, &mut print_epoch).map_err(RunError::from)?;
            save_checkpoint(&params, &base_net, &out.join("model.hbdl")).map_err(RunError::from)?;
            history.write_csv(&out.join("training_log.csv")).map_err(RunError::from)?;
            fs::write(out.join("config.ini"), cfg.to_ini()).map_err(|e| RunError::io(&out, e))?;
            println!("{}", out.join("model.hbdl").display());
        }
        Command::Evaluate { data, checkpoint, out } => {
            apply_cache_dir(&mut cfg, &data.cache_dir);
            let subset = data.subset.unwrap_or(cfg.experiment.source);
            let (ds, _) = load_partition(&cfg.data.cache_path(), subset, data.partition.unwrap_or(Partition::Test))?;
            if !checkpoint.is_file() {
                return Err(RunError::MissingCheckpoint(checkpoint).into());
            }
            let (params, net) = load_checkpoint::<f32>(&checkpoint).map_err(RunError::from)?;
            let report = evaluate_dataset(&params, &net, &ds, &cfg.eval.bootstrap).map_err(RunError::from)?;
            create_dir(&out)?;
            write_reports_csv(&out.join("report.csv"), std::slice::from_ref(&report)).map_err(RunError::from)?;
            write_reports_json(&out.join("report.json"), std::slice::from_ref(&report)).map_err(RunError::from)?;
            println!(
                "{} {}: MCC {:.4} (mean {:.4}, CI [{:.4}, {:.4}])",
                report.subset, report.partition, report.mcc.value, report.mcc.mean, report.mcc.ci_low, report.mcc.ci_high
            );
        }
        Command::Experiment {
            id,
            out,
            checkpoint,
            cache_dir,
        } => {
            apply_cache_dir(&mut cfg, &cache_dir);
            let outcome = run_experiment(id, &cfg, &out, checkpoint.as_deref())?;
            for r in &outcome.reports {
                println!(
                    "{}\t{}\tMCC {:.4} [{:.4}, {:.4}]",
                    r.subset, r.partition, r.mcc.mean, r.mcc.ci_low, r.mcc.ci_high
                );
            }
            println!("results in {}", outcome.dir.display());
        }
        Command::Report { dirs, out } => {
            let (md, csv) = write_summary(&dirs, &out)?;
            println!("{}\n{}", md.display(), csv.display());
        }
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
