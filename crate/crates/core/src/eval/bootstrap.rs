use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConfusionCounts, EvalError, Metric};
use crate::dataset::Label;
use crate::rng::Prng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_rep: usize,
    pub fraction: f64,
    pub seed: u64,
    /// Confidence level; 0.9 gives the 5th and 95th percentiles.
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_rep: 100,
            fraction: 0.25,
            seed: 7,
            level: 0.9,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.n_rep < 2 {
            return Err(EvalError::InvalidConfig(format!("need at least 2 repetitions, got {}", self.n_rep)));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(EvalError::InvalidConfig(format!("fraction {} outside (0, 1]", self.fraction)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(EvalError::InvalidConfig(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn resampled_counts(predicted: &[Label], truth: &[Label], cfg: &BootstrapConfig) -> Result<Vec<ConfusionCounts>, EvalError> {
    cfg.validate()?;
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    let n = predicted.len();
    if n == 0 {
        return Err(EvalError::EmptyInput);
    }
    let draws = ((cfg.fraction * n as f64).round() as usize).max(1);
    Ok((0..cfg.n_rep as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Prng::substream(cfg.seed, rep);
            let mut c = ConfusionCounts::default();
            for _ in 0..draws {
                let i = rng.below(n);
                c.add(predicted[i], truth[i]);
            }
            c
        })
        .collect())
}

fn summarize(mut values: Vec<f64>, level: f64) -> CiEstimate {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let low = percentile(&values, tail);
    let high = percentile(&values, 1.0 - tail);
    // a strongly skewed bootstrap distribution can put the mean outside the
    // percentile interval; widen so the interval always contains it
    CiEstimate {
        mean,
        ci_low: low.min(mean),
        ci_high: high.max(mean),
    }
}

/// Percentile bootstrap of one metric. Repetition `r` draws its indices from
/// `Prng::substream(seed, r)`, so results do not depend on thread count.
pub fn bootstrap_ci(
    predicted: &[Label],
    truth: &[Label],
    metric: Metric,
    cfg: &BootstrapConfig,
) -> Result<CiEstimate, EvalError> {
    let counts = resampled_counts(predicted, truth, cfg)?;
    Ok(summarize(counts.iter().map(|c| metric.of(c)).collect(), cfg.level))
}

/// All four metrics over the same resamples, in [`Metric::ALL`] order.
pub fn bootstrap_all(predicted: &[Label], truth: &[Label], cfg: &BootstrapConfig) -> Result<Vec<CiEstimate>, EvalError> {
    let counts = resampled_counts(predicted, truth, cfg)?;
    Ok(Metric::ALL
        .iter()
        .map(|m| summarize(counts.iter().map(|c| m.of(c)).collect(), cfg.level))
        .collect())
}
