//! Mini-batch training with AdaDelta, transfer onto a frozen convolutional
//! trunk, and checkpoint files.

mod checkpoint;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use crate::dataset::{Label, LabeledDataset, Segment, SEGMENT_LEN};
use crate::eval::{mcc, ConfusionCounts};
use crate::nn::{backward, forward_with, Mode, NetworkConfig, NetworkParams, NnError, Tensor};
use crate::optim::{adadelta_step, weighted_cross_entropy, AdaDeltaConfig, AdaDeltaState, ClassWeights, OptimError, Reduction};
use crate::rng::Prng;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid training setting: {0}")]
    Invalid(String),
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("parameters became non-finite during training")]
    NonFiniteParameters,
    #[error("checkpoint does not match the configured network: {0}")]
    IncompatibleCheckpoint(String),
    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },
    #[error("checkpoint {path} has format version {found}, expected {expected}")]
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl TrainError {
    /// True for failures caused by non-finite numbers during optimization.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. } | TrainError::NonFiniteParameters | TrainError::Optim(OptimError::NonFiniteGradient(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub weights: ClassWeights,
    pub optimizer: AdaDeltaConfig,
    pub reduction: Reduction,
    pub seed: u64,
    pub freeze_conv: bool,
    /// Transfer only: re-initialize the fully connected part instead of
    /// fine-tuning the loaded weights.
    pub reinit_head: bool,
    pub network: NetworkConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            weights: ClassWeights::default(),
            optimizer: AdaDeltaConfig::default(),
            reduction: Reduction::WeightedMean,
            seed: 1,
            freeze_conv: false,
            reinit_head: false,
            network: NetworkConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Invalid("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Invalid("batch size must be at least 1".into()));
        }
        self.weights.validate()?;
        let o = &self.optimizer;
        if !(0.0..1.0).contains(&o.rho) || !(o.eps > 0.0) || !(o.lr >= 0.0) {
            return Err(TrainError::Invalid(format!("optimizer settings out of range: {o:?}")));
        }
        self.network.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_mcc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn write_csv(&self, path: &Path) -> Result<(), TrainError> {
        let err = |e: csv::Error| TrainError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record(["epoch", "mean_loss", "train_mcc", "seconds"]).map_err(err)?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.mean_loss.to_string(),
                e.train_mcc.to_string(),
                format!("{:.3}", e.seconds),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| TrainError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Stacks the selected segments into an `(n, 1, 250)` batch.
pub fn batch_input<T: Scalar>(segments: &[Segment], indices: &[usize]) -> Tensor<T> {
    let mut data = Vec::with_capacity(indices.len() * SEGMENT_LEN);
    for &i in indices {
        data.extend(segments[i].samples.iter().map(|&v| T::of(v as f64)));
    }
    Tensor::from_vec(&[indices.len(), 1, SEGMENT_LEN], data).expect("sized")
}

// Independent generator streams derived from the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;

/// Trains from `init` (or a fresh seeded initialization). Each epoch
/// reshuffles the segments and visits every one exactly once, including the
/// final short batch. With `freeze_conv`, the convolutional part runs with
/// its running statistics and nothing in it is updated.
pub fn train<T: Scalar>(
    dataset: &LabeledDataset,
    config: &TrainConfig,
    init: Option<NetworkParams<T>>,
) -> Result<(NetworkParams<T>, TrainHistory), TrainError> {
    train_observed(dataset, config, init, &mut |_| {})
}

/// [`train`], calling `on_epoch` after every epoch.
pub fn train_observed<T: Scalar>(
    dataset: &LabeledDataset,
    config: &TrainConfig,
    init: Option<NetworkParams<T>>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(NetworkParams<T>, TrainHistory), TrainError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let net = &config.network;
    let mut params = match init {
        Some(p) => {
            p.check(net)?;
            p
        }
        None => NetworkParams::init(net, &mut Prng::substream(config.seed, STREAM_INIT))?,
    };
    let mut state = AdaDeltaState::for_params(&params, config.optimizer);
    let mut shuffle_rng = Prng::substream(config.seed, STREAM_SHUFFLE);
    let mut dropout_rng = Prng::substream(config.seed, STREAM_DROPOUT);
    let conv_mode = if config.freeze_conv { Mode::Eval } else { Mode::Train };
    let labels = dataset.labels();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut counts = ConfusionCounts::default();
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let x = batch_input::<T>(&dataset.segments, idx);
            let y: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
            let fwd = forward_with(&params, net, &x, conv_mode, Mode::Train, &mut dropout_rng)?;
            let (loss, dlogits) = weighted_cross_entropy(&fwd.logits, &y, config.weights, config.reduction)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b + 1 });
            }
            let grads = backward(&params, &fwd, &dlogits, config.freeze_conv)?;
            adadelta_step(&mut params, &grads, &mut state)?;
            if !config.freeze_conv {
                params.update_running_stats(&fwd, net.bn_momentum);
            }
            loss_sum += loss.as_f64() * idx.len() as f64;
            for (row, &t) in fwd.logits.data().chunks_exact(2).zip(&y) {
                counts.add(if row[1] > row[0] { Label::Beat } else { Label::NoBeat }, t);
            }
        }
        let record = EpochRecord {
            epoch,
            mean_loss: loss_sum / dataset.len() as f64,
            train_mcc: mcc(&counts),
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.epochs.push(record);
    }
    if !params.all_finite() {
        return Err(TrainError::NonFiniteParameters);
    }
    Ok((params, history))
}

/// Retrains the fully connected part of a checkpointed network on a new
/// dataset while keeping the convolutional part (weights and running
/// statistics) exactly as loaded. Zero epochs returns the checkpoint.
pub fn transfer<T: Scalar>(
    base: &NetworkParams<T>,
    base_config: &NetworkConfig,
    dataset: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(NetworkParams<T>, TrainHistory), TrainError> {
    transfer_observed(base, base_config, dataset, config, &mut |_| {})
}

/// [`transfer`], calling `on_epoch` after every epoch.
pub fn transfer_observed<T: Scalar>(
    base: &NetworkParams<T>,
    base_config: &NetworkConfig,
    dataset: &LabeledDataset,
    config: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(NetworkParams<T>, TrainHistory), TrainError> {
    if base_config != &config.network {
        return Err(TrainError::IncompatibleCheckpoint(format!(
            "checkpoint network {base_config:?} differs from configured {:?}",
            config.network
        )));
    }
    base.check(base_config)
        .map_err(|e| TrainError::IncompatibleCheckpoint(e.to_string()))?;
    if config.epochs == 0 {
        return Ok((base.clone(), TrainHistory::default()));
    }
    let mut init = base.clone();
    if config.reinit_head {
        let fresh = NetworkParams::<T>::init(base_config, &mut Prng::substream(config.seed, STREAM_INIT))?;
        init.fc = fresh.fc;
    }
    let cfg = TrainConfig {
        freeze_conv: true,
        ..config.clone()
    };
    train_observed(dataset, &cfg, Some(init), on_epoch)
}
