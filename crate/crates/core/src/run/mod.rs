//! Orchestration of the three experiments, run configuration, result
//! charts and consolidated summaries.

pub mod config;
mod experiment;
mod summary;
mod svg;

use std::path::PathBuf;

use thiserror::Error;

pub use self::config::{ConfigError, DataConfig, EvalConfig, ExperimentConfig, RunConfig};
pub use self::experiment::{
    ingest_all, load_partition, run_experiment, source_datasets, ExperimentId, ExperimentOutcome, HashedFile,
    Provenance,
};
pub use self::summary::{summarize_runs, write_summary, RunSummary};
pub use self::svg::mcc_chart;

use crate::dataset::DatasetError;
use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("missing dataset cache {0}; build it with `ingest` or `build-dataset`")]
    MissingCache(PathBuf),
    #[error("missing checkpoint {0}; run experiment 1 first or pass --checkpoint")]
    MissingCheckpoint(PathBuf),
    #[error("no reports found under {0}")]
    NoReportsFound(PathBuf),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    pub(crate) fn io(path: impl Into<PathBuf>, e: impl ToString) -> Self {
        RunError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    /// Process exit status: 1 for configuration problems, 2 for data and
    /// file problems, 3 for numeric failures during training.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Train(e) if e.is_numeric() => 3,
            RunError::Train(TrainError::Invalid(_)) => 1,
            _ => 2,
        }
    }
}
