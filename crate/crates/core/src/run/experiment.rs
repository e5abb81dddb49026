use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{mcc_chart, RunConfig, RunError};
use crate::dataset::{
    build_subset, content_hash, load_cache, save_cache, write_stats_csv, LabeledDataset, Partition, StatsRow, Subset,
};
use crate::eval::{evaluate_dataset, write_reports_csv, write_reports_json, EvalReport};
use crate::ingest::Manifest;
use crate::nn::NetworkConfig;
use crate::train::{load_checkpoint, save_checkpoint, train_observed, transfer_observed, EpochRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentId {
    /// Train on the source subset, evaluate on its Train and Test partitions.
    Source = 1,
    /// Evaluate the source model, unchanged, on every target Test partition.
    CrossSubset = 2,
    /// Retrain the fully connected part on each target Train partition.
    Transfer = 3,
}

impl ExperimentId {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn dir_name(self) -> String {
        format!("experiment{}", self.number())
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(ExperimentId::Source),
            "2" => Ok(ExperimentId::CrossSubset),
            "3" => Ok(ExperimentId::Transfer),
            other => Err(format!("experiment must be 1, 2 or 3, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedFile {
    pub file: String,
    /// Git-style blob hash (SHA-256).
    pub hash: String,
}

impl HashedFile {
    fn of(path: &Path) -> Result<Self, RunError> {
        Ok(HashedFile {
            file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            hash: content_hash(path)?,
        })
    }
}

/// Everything needed to re-run an experiment bit-identically, next to the
/// full configuration snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: u8,
    pub train_seed: u64,
    pub split_seed: u64,
    pub bootstrap_seed: u64,
    pub network: NetworkConfig,
    pub caches: Vec<HashedFile>,
    pub base_checkpoint: Option<HashedFile>,
    pub checkpoints: Vec<HashedFile>,
    pub skipped_targets: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub reports: Vec<EvalReport>,
    pub checkpoints: Vec<PathBuf>,
    pub skipped_targets: Vec<Subset>,
}

fn is_optional(subset: Subset) -> bool {
    matches!(
        subset,
        Subset::BaselineFlexComp | Subset::BaselineComfTech | Subset::MovementComfTech
    )
}

pub fn load_partition(cache_dir: &Path, subset: Subset, partition: Partition) -> Result<(LabeledDataset, PathBuf), RunError> {
    let path = subset.cache_path(cache_dir, partition);
    if !path.is_file() {
        return Err(RunError::MissingCache(path));
    }
    Ok((load_cache(&path)?, path))
}

fn first_subjects(ds: &LabeledDataset, n: usize) -> LabeledDataset {
    if n == 0 {
        return ds.clone();
    }
    let keep = ds.subject_ids().into_iter().take(n).collect();
    ds.restrict_to_subjects(&keep)
}

/// Source Train and Test partitions after the optional down-scaling in the
/// `[experiment]` section (subject counts apply to both, the time limit to
/// Train only).
pub fn source_datasets(cfg: &RunConfig) -> Result<(LabeledDataset, LabeledDataset, Vec<PathBuf>), RunError> {
    let x = &cfg.experiment;
    let dir = cfg.data.cache_path();
    let (train, train_path) = load_partition(&dir, x.source, Partition::Train)?;
    let (test, test_path) = load_partition(&dir, x.source, Partition::Test)?;
    let mut train = first_subjects(&train, x.train_subjects);
    if x.max_seconds > 0.0 {
        train = train.truncate_records(x.max_seconds);
    }
    let test = first_subjects(&test, x.test_subjects);
    Ok((train, test, vec![train_path, test_path]))
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

fn log_epoch(label: &str) -> impl FnMut(&EpochRecord) + '_ {
    move |e| {
        eprintln!(
            "[{label}] epoch {:>3}  loss {:.5}  train MCC {:.4}  {:.1}s",
            e.epoch, e.mean_loss, e.train_mcc, e.seconds
        )
    }
}

/// Runs one experiment into `out_root/experimentN/`. Experiments 2 and 3
/// read the source model from `checkpoint`, defaulting to
/// `out_root/experiment1/model.hbdl`.
pub fn run_experiment(
    id: ExperimentId,
    cfg: &RunConfig,
    out_root: &Path,
    checkpoint: Option<&Path>,
) -> Result<ExperimentOutcome, RunError> {
    cfg.validate()?;
    let dir = out_root.join(id.dir_name());
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
    let cache_dir = cfg.data.cache_path();
    let boot = &cfg.eval.bootstrap;
    let mut reports = Vec::new();
    let mut checkpoints = Vec::new();
    let mut caches = Vec::new();
    let mut skipped = Vec::new();
    let mut base_checkpoint = None;
    let mut network = cfg.train.network.clone();

    match id {
        ExperimentId::Source => {
            let (train, test, paths) = source_datasets(cfg)?;
            caches.extend(paths);
            let (params, history) =
                train_observed::<f32>(&train, &cfg.train, None, &mut log_epoch(cfg.experiment.source.name()))?;
            let ckpt = dir.join("model.hbdl");
            save_checkpoint(&params, &cfg.train.network, &ckpt)?;
            history.write_csv(&dir.join("training_log.csv"))?;
            checkpoints.push(ckpt);
            for ds in [&train, &test] {
                reports.push(evaluate_dataset(&params, &cfg.train.network, ds, boot)?);
            }
        }
        ExperimentId::CrossSubset | ExperimentId::Transfer => {
            let ckpt = checkpoint
                .map(Path::to_path_buf)
                .unwrap_or_else(|| out_root.join(ExperimentId::Source.dir_name()).join("model.hbdl"));
            if !ckpt.is_file() {
                return Err(RunError::MissingCheckpoint(ckpt));
            }
            let (base, base_net) = load_checkpoint::<f32>(&ckpt)?;
            base_checkpoint = Some(HashedFile::of(&ckpt)?);
            network = base_net.clone();
            for &target in &cfg.experiment.targets {
                let test_path = target.cache_path(&cache_dir, Partition::Test);
                let train_path = target.cache_path(&cache_dir, Partition::Train);
                let needed: &[&PathBuf] = match id {
                    ExperimentId::CrossSubset => &[&test_path],
                    _ => &[&train_path, &test_path],
                };
                if let Some(missing) = needed.iter().find(|p| !p.is_file()) {
                    if is_optional(target) {
                        eprintln!("skipping {target}: {} not found", missing.display());
                        skipped.push(target);
                        continue;
                    }
                    return Err(RunError::MissingCache((*missing).clone()));
                }
                let test = load_cache(&test_path)?;
                if id == ExperimentId::CrossSubset {
                    caches.push(test_path);
                    reports.push(evaluate_dataset(&base, &base_net, &test, boot)?);
                    continue;
                }
                let train = load_cache(&train_path)?;
                caches.extend([train_path, test_path]);
                let (params, history) =
                    transfer_observed(&base, &base_net, &train, &cfg.train, &mut log_epoch(target.name()))?;
                let out = dir.join(format!("transfer-{}.hbdl", target.slug()));
                save_checkpoint(&params, &base_net, &out)?;
                history.write_csv(&dir.join(format!("training_log-{}.csv", target.slug())))?;
                checkpoints.push(out);
                for ds in [&train, &test] {
                    reports.push(evaluate_dataset(&params, &base_net, ds, boot)?);
                }
            }
        }
    }

    let mut snapshot = cfg.clone();
    snapshot.train.network = network.clone();
    write_text(&dir.join("config.ini"), &snapshot.to_ini())?;
    write_reports_csv(&dir.join("reports.csv"), &reports)?;
    write_reports_json(&dir.join("reports.json"), &reports)?;
    write_text(
        &dir.join("mcc.svg"),
        &mcc_chart(&reports, &format!("Experiment {id}: MCC with {:.0}% CI", boot.level * 100.0)),
    )?;
    let provenance = Provenance {
        experiment: id.number(),
        train_seed: cfg.train.seed,
        split_seed: cfg.data.split_seed,
        bootstrap_seed: boot.seed,
        network,
        caches: caches.iter().map(|p| HashedFile::of(p)).collect::<Result<_, _>>()?,
        base_checkpoint,
        checkpoints: checkpoints.iter().map(|p| HashedFile::of(p)).collect::<Result<_, _>>()?,
        skipped_targets: skipped.iter().map(|s| s.name().to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&provenance).map_err(|e| RunError::io(&dir, e))?;
    write_text(&dir.join("provenance.json"), &(json + "\n"))?;
    Ok(ExperimentOutcome {
        dir,
        reports,
        checkpoints,
        skipped_targets: skipped,
    })
}

/// Builds train/test caches for every subset that has manifest entries and
/// writes `stats.csv` next to them.
pub fn ingest_all(cfg: &RunConfig, manifest: &Manifest, subsets: &[Subset]) -> Result<Vec<StatsRow>, RunError> {
    let dir = cfg.data.cache_path();
    fs::create_dir_all(&dir).map_err(|e| RunError::io(&dir, e))?;
    let opts = cfg.data.build_options();
    let mut rows = Vec::new();
    for &subset in subsets {
        if manifest.entries_with_tags(subset.tags()).next().is_none() {
            continue;
        }
        let build = build_subset(subset, manifest, &opts)?;
        for p in [Partition::Train, Partition::Test] {
            let ds = build.partition(p);
            save_cache(ds, &subset.cache_path(&dir, p))?;
            rows.push(StatsRow::of(ds));
        }
    }
    write_stats_csv(&dir.join("stats.csv"), &rows)?;
    Ok(rows)
}
