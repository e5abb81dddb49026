//! Classification metrics with BEAT as the positive class, and bootstrap
//! confidence intervals.

mod bootstrap;
mod metrics;
mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use self::bootstrap::{bootstrap_all, bootstrap_ci, percentile, BootstrapConfig, CiEstimate};
pub use self::metrics::{confusion, mcc, precision_sensitivity_f1, ConfusionCounts, Metric};
pub use self::report::{
    evaluate_dataset, predict_labels, read_reports_csv, write_reports_csv, write_reports_json, EvalReport,
    MetricSummary,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and label vectors differ in length ({predicted} vs {truth})")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("invalid bootstrap setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}
