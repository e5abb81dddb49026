//! Heart beat detection in single-lead ECG: WFDB/CSV ingestion, 0.25 s
//! segment datasets, a hand-written 1-D CNN with AdaDelta training and
//! transfer, bootstrap-evaluated metrics, and the experiment runner.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`).
//! Training and checkpoints use `f32`; `f64` serves as a reference in
//! gradient checks. The aliases below name the common instantiations.

pub mod cli;
pub mod dataset;
pub mod eval;
pub mod ingest;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod run;
pub mod scalar;
pub mod train;

pub type Tensor32 = nn::Tensor<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type NetworkParams32 = nn::NetworkParams<f32>;
pub type NetworkParams64 = nn::NetworkParams<f64>;
pub type Gradients32 = nn::Gradients<f32>;
pub type Gradients64 = nn::Gradients<f64>;
pub type AdaDeltaState32 = optim::AdaDeltaState<f32>;
