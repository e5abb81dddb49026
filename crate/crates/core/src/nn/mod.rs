//! Dense 1-D tensor kernels and the beat-detection network, forward and
//! backward, written out by hand.
//!
//! Everything here is generic over [`Scalar`](crate::scalar::Scalar) so the
//! same code runs in `f32` for training and in `f64` for reference
//! computations.

mod activation;
mod batchnorm;
mod conv;
mod linear;
mod network;
mod pool;
mod tensor;

use thiserror::Error;

pub use self::activation::{dropout_backward, dropout_forward, relu_backward, relu_forward, softmax};
pub use self::batchnorm::{batchnorm1d_backward, batchnorm1d_forward, BatchNormParams, BnCache};
pub use self::conv::{conv1d_backward, conv1d_forward, ConvGrads};
pub use self::linear::{linear_backward, linear_forward, LinearGrads};
pub use self::network::{
    backward, forward, forward_with, BlockGrads, ConvBlockConfig, ConvBlockParams, ConvCache, FcGrads, Forward, Gradients,
    LinearParams, NetworkConfig, NetworkParams, ParamKind, ParamPart, ParamRef, N_CLASSES, N_CONV_BLOCKS, N_FC_BLOCKS,
};
pub use self::pool::{maxpool1d_backward, maxpool1d_forward};
pub use self::tensor::Tensor;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch normalization needs at least 2 values per channel in train mode, got {0}")]
    DegenerateBatch(usize),
    #[error("dropout probability must lie in [0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
}

/// Train mode uses batch statistics and active dropout; eval mode uses
/// running statistics and disables dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub(crate) fn shape_err(msg: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(msg.into())
}
