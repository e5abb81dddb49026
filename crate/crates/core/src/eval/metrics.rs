use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Beat, Label::Beat) => self.tp += 1,
            (Label::NoBeat, Label::NoBeat) => self.tn += 1,
            (Label::Beat, Label::NoBeat) => self.fp += 1,
            (Label::NoBeat, Label::Beat) => self.fn_ += 1,
        }
    }
}

pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionCounts, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        c.add(p, t);
    }
    Ok(c)
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return 0.0;
    }
    let denom = factors.iter().product::<f64>().sqrt();
    ((tp * tn - fp * fn_) / denom).clamp(-1.0, 1.0)
}

/// `(+p, Se, F1)`, each 0 when its denominator is 0.
pub fn precision_sensitivity_f1(c: &ConfusionCounts) -> (f64, f64, f64) {
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = ratio(c.tp, c.tp + c.fp);
    let se = ratio(c.tp, c.tp + c.fn_);
    let f1 = if p + se == 0.0 { 0.0 } else { 2.0 * p * se / (p + se) };
    (p, se, f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mcc,
    Precision,
    Sensitivity,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Mcc, Metric::Precision, Metric::Sensitivity, Metric::F1];

    pub fn of(self, c: &ConfusionCounts) -> f64 {
        match self {
            Metric::Mcc => mcc(c),
            Metric::Precision => precision_sensitivity_f1(c).0,
            Metric::Sensitivity => precision_sensitivity_f1(c).1,
            Metric::F1 => precision_sensitivity_f1(c).2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Mcc => "mcc",
            Metric::Precision => "precision",
            Metric::Sensitivity => "sensitivity",
            Metric::F1 => "f1",
        }
    }

    /// Column heading used in tables.
    pub fn heading(self) -> &'static str {
        match self {
            Metric::Mcc => "MCC",
            Metric::Precision => "+p",
            Metric::Sensitivity => "Se",
            Metric::F1 => "F1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EvalError::InvalidConfig(format!("unknown metric {s:?}")))
    }
}
