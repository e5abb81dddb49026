//! Weighted cross-entropy and the AdaDelta update rule.

mod adadelta;
mod loss;

use thiserror::Error;

pub use self::adadelta::{adadelta_step, AdaDeltaConfig, AdaDeltaState};
pub use self::loss::{weighted_cross_entropy, ClassWeights, Reduction};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("loss over an empty batch")]
    EmptyBatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in parameter array {0}")]
    NonFiniteGradient(usize),
    #[error("invalid setting: {0}")]
    Invalid(String),
}
