use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{bootstrap_all, confusion, BootstrapConfig, EvalError, Metric};
use crate::dataset::{Label, LabeledDataset, Segment};
use crate::nn::{forward, Mode, NetworkConfig, NetworkParams};
use crate::rng::Prng;
use crate::scalar::Scalar;
use crate::train::batch_input;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Metric on the full set.
    pub value: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub subset: String,
    pub partition: String,
    pub n_segments: usize,
    pub mcc: MetricSummary,
    pub precision: MetricSummary,
    pub sensitivity: MetricSummary,
    pub f1: MetricSummary,
}

impl EvalReport {
    pub fn from_predictions(
        subset: &str,
        partition: &str,
        predicted: &[Label],
        truth: &[Label],
        cfg: &BootstrapConfig,
    ) -> Result<Self, EvalError> {
        let counts = confusion(predicted, truth)?;
        let cis = bootstrap_all(predicted, truth, cfg)?;
        let s = |i: usize| MetricSummary {
            value: Metric::ALL[i].of(&counts),
            mean: cis[i].mean,
            ci_low: cis[i].ci_low,
            ci_high: cis[i].ci_high,
        };
        Ok(EvalReport {
            subset: subset.to_string(),
            partition: partition.to_string(),
            n_segments: predicted.len(),
            mcc: s(0),
            precision: s(1),
            sensitivity: s(2),
            f1: s(3),
        })
    }

    pub fn metric(&self, m: Metric) -> &MetricSummary {
        match m {
            Metric::Mcc => &self.mcc,
            Metric::Precision => &self.precision,
            Metric::Sensitivity => &self.sensitivity,
            Metric::F1 => &self.f1,
        }
    }

    fn metric_mut(&mut self, m: Metric) -> &mut MetricSummary {
        match m {
            Metric::Mcc => &mut self.mcc,
            Metric::Precision => &mut self.precision,
            Metric::Sensitivity => &mut self.sensitivity,
            Metric::F1 => &mut self.f1,
        }
    }
}

/// Eval-mode class predictions (argmax of the logits, NO-BEAT on ties).
pub fn predict_labels<T: Scalar>(
    params: &NetworkParams<T>,
    config: &NetworkConfig,
    segments: &[Segment],
    batch_size: usize,
) -> Result<Vec<Label>, EvalError> {
    let mut rng = Prng::seed_from_u64(0);
    let mut out = Vec::with_capacity(segments.len());
    let idx: Vec<usize> = (0..segments.len()).collect();
    for chunk in idx.chunks(batch_size.max(1)) {
        let x = batch_input::<T>(segments, chunk);
        let fwd = forward(params, config, &x, Mode::Eval, &mut rng)?;
        for row in fwd.logits.data().chunks_exact(2) {
            out.push(if row[1] > row[0] { Label::Beat } else { Label::NoBeat });
        }
    }
    Ok(out)
}

pub fn evaluate_dataset<T: Scalar>(
    params: &NetworkParams<T>,
    config: &NetworkConfig,
    dataset: &LabeledDataset,
    bootstrap: &BootstrapConfig,
) -> Result<EvalReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let predicted = predict_labels(params, config, &dataset.segments, 256)?;
    EvalReport::from_predictions(
        &dataset.subset_name,
        &dataset.partition.to_string(),
        &predicted,
        &dataset.labels(),
        bootstrap,
    )
}

const FIELDS: [&str; 4] = ["", "_mean", "_ci_low", "_ci_high"];

fn header() -> Vec<String> {
    let mut h = vec!["subset".to_string(), "partition".into(), "n_segments".into()];
    for m in Metric::ALL {
        for f in FIELDS {
            h.push(format!("{}{f}", m.as_str()));
        }
    }
    h
}

fn io_err(path: &Path, e: impl ToString) -> EvalError {
    EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// One row per report; metric columns are `<metric>`, `<metric>_mean`,
/// `<metric>_ci_low`, `<metric>_ci_high`.
pub fn write_reports_csv(path: &Path, reports: &[EvalReport]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header()).map_err(|e| io_err(path, e))?;
    for r in reports {
        let mut row = vec![r.subset.clone(), r.partition.clone(), r.n_segments.to_string()];
        for m in Metric::ALL {
            let s = r.metric(m);
            row.extend([s.value, s.mean, s.ci_low, s.ci_high].map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_reports_csv(path: &Path) -> Result<Vec<EvalReport>, EvalError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let expected = header();
    let got: Vec<String> = r.headers().map_err(|e| io_err(path, e))?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(io_err(path, "unexpected report columns"));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let num = |i: usize| -> Result<f64, EvalError> {
            rec[i].parse::<f64>().map_err(|e| io_err(path, format!("column {}: {e}", expected[i])))
        };
        let blank = MetricSummary {
            value: 0.0,
            mean: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
        };
        let mut report = EvalReport {
            subset: rec[0].to_string(),
            partition: rec[1].to_string(),
            n_segments: rec[2].parse().map_err(|e| io_err(path, format!("n_segments: {e}")))?,
            mcc: blank,
            precision: blank,
            sensitivity: blank,
            f1: blank,
        };
        for (k, m) in Metric::ALL.into_iter().enumerate() {
            let base = 3 + 4 * k;
            *report.metric_mut(m) = MetricSummary {
                value: num(base)?,
                mean: num(base + 1)?,
                ci_low: num(base + 2)?,
                ci_high: num(base + 3)?,
            };
        }
        out.push(report);
    }
    Ok(out)
}

pub fn write_reports_json(path: &Path, reports: &[EvalReport]) -> Result<(), EvalError> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    let text = serde_json::to_string_pretty(reports).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    f.write_all(b"\n").map_err(|e| io_err(path, e))
}
