use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::OptimError;
use crate::dataset::Label;
use crate::nn::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub no_beat: f64,
    pub beat: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        ClassWeights {
            no_beat: 0.06,
            beat: 0.94,
        }
    }
}

impl ClassWeights {
    pub const EQUAL: ClassWeights = ClassWeights { no_beat: 1.0, beat: 1.0 };

    pub fn validate(&self) -> Result<(), OptimError> {
        if self.no_beat > 0.0 && self.beat > 0.0 && self.no_beat.is_finite() && self.beat.is_finite() {
            Ok(())
        } else {
            Err(OptimError::Invalid(format!("class weights must be positive, got {self:?}")))
        }
    }

    pub fn of(&self, label: Label) -> f64 {
        match label {
            Label::NoBeat => self.no_beat,
            Label::Beat => self.beat,
        }
    }
}

/// How per-sample losses are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduction {
    /// `sum(w_i l_i) / sum(w_i)`
    #[default]
    WeightedMean,
    /// `sum(w_i l_i)`
    Sum,
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reduction::WeightedMean => "weighted-mean",
            Reduction::Sum => "sum",
        })
    }
}

impl FromStr for Reduction {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weighted-mean" | "mean" => Ok(Reduction::WeightedMean),
            "sum" => Ok(Reduction::Sum),
            other => Err(OptimError::Invalid(format!("unknown reduction {other:?}"))),
        }
    }
}

/// Class-weighted cross-entropy of softmax(logits) against `labels`.
/// Returns the loss and its exact gradient with respect to the logits.
pub fn weighted_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[Label],
    weights: ClassWeights,
    reduction: Reduction,
) -> Result<(T, Tensor<T>), OptimError> {
    let (n, k) = logits
        .dims2()
        .map_err(|e| OptimError::ShapeMismatch(e.to_string()))?;
    if n == 0 {
        return Err(OptimError::EmptyBatch);
    }
    if k != 2 || labels.len() != n {
        return Err(OptimError::ShapeMismatch(format!(
            "logits {:?} with {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    weights.validate()?;
    let w: Vec<T> = labels.iter().map(|&l| T::of(weights.of(l))).collect();
    let norm = match reduction {
        Reduction::WeightedMean => w.iter().copied().sum::<T>(),
        Reduction::Sum => T::one(),
    };
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(n * k);
    for ((row, &label), &wi) in logits.data().chunks_exact(k).zip(labels).zip(&w) {
        let max = row[0].max(row[1]);
        let e0 = (row[0] - max).exp();
        let e1 = (row[1] - max).exp();
        let s = e0 + e1;
        let log_s = s.ln();
        let y = label as usize;
        total += wi * (log_s - (row[y] - max));
        let scale = wi / norm;
        for (c, e) in [e0, e1].into_iter().enumerate() {
            let target = if c == y { T::one() } else { T::zero() };
            grad.push(scale * (e / s - target));
        }
    }
    let grad = Tensor::from_vec(&[n, k], grad).map_err(|e| OptimError::ShapeMismatch(e.to_string()))?;
    Ok((total / norm, grad))
}
