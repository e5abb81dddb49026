//! Run configuration: a UTF-8 `key = value` file with `[data]`,
//! `[network]`, `[train]`, `[eval]` and `[experiment]` sections. Missing keys
//! take their defaults; unknown keys are rejected. [`RunConfig::to_ini`]
//! writes every key, so a snapshot fully describes a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use thiserror::Error;

use crate::dataset::{BuildOptions, Subset};
use crate::eval::BootstrapConfig;
use crate::ingest::BeatCodeSet;
use crate::nn::ConvBlockConfig;
use crate::optim::Reduction;
use crate::train::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config key [{section}] {key}")]
    UnknownKey { section: String, key: String },
    #[error("config [{section}] {key} = {value:?}: {message}")]
    InvalidValue {
        section: String,
        key: String,
        value: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    /// Base directory for the relative paths below.
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub cache_dir: PathBuf,
    pub beat_codes: BeatCodeSet,
    pub max_duration_s: f64,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        let b = BuildOptions::default();
        DataConfig {
            root: PathBuf::from("."),
            manifest: PathBuf::from("manifest.txt"),
            cache_dir: PathBuf::from("cache"),
            beat_codes: b.beat_codes,
            max_duration_s: b.max_duration_s,
            train_fraction: b.train_fraction,
            split_seed: b.split_seed,
        }
    }
}

impl DataConfig {
    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(&self.manifest)
    }

    pub fn cache_path(&self) -> PathBuf {
        self.root.join(&self.cache_dir)
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            beat_codes: self.beat_codes,
            max_duration_s: self.max_duration_s,
            train_fraction: self.train_fraction,
            split_seed: self.split_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub bootstrap: BootstrapConfig,
    pub batch_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            bootstrap: BootstrapConfig::default(),
            batch_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: Subset,
    pub targets: Vec<Subset>,
    /// Use only the first N subjects (sorted ids) of the source Train
    /// partition; 0 keeps all.
    pub train_subjects: usize,
    /// Same for the source Test partition.
    pub test_subjects: usize,
    /// Use only segments within the first `max_seconds` of each source
    /// record; 0 keeps all.
    pub max_seconds: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: Subset::NormalSinusLongTerm,
            targets: Subset::ALL[1..].to_vec(),
            train_subjects: 0,
            test_subjects: 0,
            max_seconds: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub experiment: ExperimentConfig,
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| e.to_string())
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn parse_conv_block(v: &str) -> Result<ConvBlockConfig, String> {
    let parts: Vec<usize> = v
        .split(':')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [i, o, k] => Ok(ConvBlockConfig {
            in_channels: i,
            out_channels: o,
            kernel_size: k,
        }),
        _ => Err("expected in:out:kernel".into()),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut cfg = RunConfig::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(ConfigError::UnknownKey {
                        section: String::new(),
                        key: k.to_string(),
                    });
                }
                continue;
            };
            for (key, value) in props.iter() {
                cfg.set(section, key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key; `section` and `key` are matched case-insensitively.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let s = section.trim().to_ascii_lowercase();
        let k = key.trim().to_ascii_lowercase();
        let invalid = |message: String| ConfigError::InvalidValue {
            section: s.clone(),
            key: k.clone(),
            value: value.to_string(),
            message,
        };
        let d = &mut self.data;
        let t = &mut self.train;
        let e = &mut self.eval;
        let x = &mut self.experiment;
        let r: Result<(), String> = match (s.as_str(), k.as_str()) {
            ("data", "root") => {
                d.root = PathBuf::from(value.trim());
                Ok(())
            }
            ("data", "manifest") => {
                d.manifest = PathBuf::from(value.trim());
                Ok(())
            }
            ("data", "cache_dir") => {
                d.cache_dir = PathBuf::from(value.trim());
                Ok(())
            }
            ("data", "beat_codes") => value.parse().map(|v| d.beat_codes = v),
            ("data", "max_duration_s") => parse_num(value).map(|v| d.max_duration_s = v),
            ("data", "train_fraction") => parse_num(value).map(|v| d.train_fraction = v),
            ("data", "split_seed") => parse_num(value).map(|v| d.split_seed = v),

            ("network", "conv_blocks") => parse_list(value, parse_conv_block).map(|v| t.network.conv_blocks = v),
            ("network", "fc_sizes") => parse_list(value, parse_num).map(|v| t.network.fc_sizes = v),
            ("network", "dropout_p") => parse_num(value).map(|v| t.network.dropout_p = v),
            ("network", "pool_kernel") => parse_num(value).map(|v| t.network.pool_kernel = v),
            ("network", "input_len") => parse_num(value).map(|v| t.network.input_len = v),
            ("network", "bn_eps") => parse_num(value).map(|v| t.network.bn_eps = v),
            ("network", "bn_momentum") => parse_num(value).map(|v| t.network.bn_momentum = v),

            ("train", "epochs") => parse_num(value).map(|v| t.epochs = v),
            ("train", "batch_size") => parse_num(value).map(|v| t.batch_size = v),
            ("train", "lr") => parse_num(value).map(|v| t.optimizer.lr = v),
            ("train", "rho") => parse_num(value).map(|v| t.optimizer.rho = v),
            ("train", "eps") => parse_num(value).map(|v| t.optimizer.eps = v),
            ("train", "weight_nobeat") => parse_num(value).map(|v| t.weights.no_beat = v),
            ("train", "weight_beat") => parse_num(value).map(|v| t.weights.beat = v),
            ("train", "reduction") => value.parse::<Reduction>().map(|v| t.reduction = v).map_err(|e| e.to_string()),
            ("train", "seed") => parse_num(value).map(|v| t.seed = v),
            ("train", "reinit_head") => parse_bool(value).map(|v| t.reinit_head = v),

            ("eval", "bootstrap_reps") => parse_num(value).map(|v| e.bootstrap.n_rep = v),
            ("eval", "bootstrap_fraction") => parse_num(value).map(|v| e.bootstrap.fraction = v),
            ("eval", "bootstrap_seed") => parse_num(value).map(|v| e.bootstrap.seed = v),
            ("eval", "ci_level") => parse_num(value).map(|v| e.bootstrap.level = v),
            ("eval", "batch_size") => parse_num(value).map(|v| e.batch_size = v),

            ("experiment", "source") => value.parse::<Subset>().map(|v| x.source = v),
            ("experiment", "targets") => parse_list(value, |s| s.parse::<Subset>()).map(|v| x.targets = v),
            ("experiment", "train_subjects") => parse_num(value).map(|v| x.train_subjects = v),
            ("experiment", "test_subjects") => parse_num(value).map(|v| x.test_subjects = v),
            ("experiment", "max_seconds") => parse_num(value).map(|v| x.max_seconds = v),
            _ => {
                return Err(ConfigError::UnknownKey {
                    section: s.clone(),
                    key: k.clone(),
                })
            }
        };
        r.map_err(invalid)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let mut t = self.train.clone();
        t.epochs = t.epochs.max(1);
        t.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.eval
            .bootstrap
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.eval.batch_size == 0 {
            return bad("eval batch_size must be positive".into());
        }
        let d = &self.data;
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", d.train_fraction));
        }
        if !(d.max_duration_s > 0.0) {
            return bad("max_duration_s must be positive".into());
        }
        if self.experiment.targets.contains(&self.experiment.source) {
            return bad("the source subset cannot also be a target".into());
        }
        if !(self.experiment.max_seconds >= 0.0) {
            return bad("max_seconds must be non-negative".into());
        }
        Ok(())
    }

    /// Every key with its current value.
    pub fn to_ini(&self) -> String {
        let d = &self.data;
        let n = &self.train.network;
        let t = &self.train;
        let e = &self.eval;
        let x = &self.experiment;
        let mut s = String::new();
        let _ = writeln!(s, "[data]");
        let _ = writeln!(s, "root = {}", d.root.display());
        let _ = writeln!(s, "manifest = {}", d.manifest.display());
        let _ = writeln!(s, "cache_dir = {}", d.cache_dir.display());
        let _ = writeln!(s, "beat_codes = {}", d.beat_codes);
        let _ = writeln!(s, "max_duration_s = {}", d.max_duration_s);
        let _ = writeln!(s, "train_fraction = {}", d.train_fraction);
        let _ = writeln!(s, "split_seed = {}", d.split_seed);
        let _ = writeln!(s, "\n[network]");
        let blocks: Vec<String> = n
            .conv_blocks
            .iter()
            .map(|b| format!("{}:{}:{}", b.in_channels, b.out_channels, b.kernel_size))
            .collect();
        let _ = writeln!(s, "conv_blocks = {}", blocks.join(", "));
        let fc: Vec<String> = n.fc_sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "fc_sizes = {}", fc.join(", "));
        let _ = writeln!(s, "dropout_p = {}", n.dropout_p);
        let _ = writeln!(s, "pool_kernel = {}", n.pool_kernel);
        let _ = writeln!(s, "input_len = {}", n.input_len);
        let _ = writeln!(s, "bn_eps = {:e}", n.bn_eps);
        let _ = writeln!(s, "bn_momentum = {}", n.bn_momentum);
        let _ = writeln!(s, "\n[train]");
        let _ = writeln!(s, "epochs = {}", t.epochs);
        let _ = writeln!(s, "batch_size = {}", t.batch_size);
        let _ = writeln!(s, "lr = {}", t.optimizer.lr);
        let _ = writeln!(s, "rho = {}", t.optimizer.rho);
        let _ = writeln!(s, "eps = {:e}", t.optimizer.eps);
        let _ = writeln!(s, "weight_nobeat = {}", t.weights.no_beat);
        let _ = writeln!(s, "weight_beat = {}", t.weights.beat);
        let _ = writeln!(s, "reduction = {}", t.reduction);
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "reinit_head = {}", t.reinit_head);
        let _ = writeln!(s, "\n[eval]");
        let _ = writeln!(s, "bootstrap_reps = {}", e.bootstrap.n_rep);
        let _ = writeln!(s, "bootstrap_fraction = {}", e.bootstrap.fraction);
        let _ = writeln!(s, "bootstrap_seed = {}", e.bootstrap.seed);
        let _ = writeln!(s, "ci_level = {}", e.bootstrap.level);
        let _ = writeln!(s, "batch_size = {}", e.batch_size);
        let _ = writeln!(s, "\n[experiment]");
        let _ = writeln!(s, "source = {}", x.source);
        let targets: Vec<&str> = x.targets.iter().map(|t| t.name()).collect();
        let _ = writeln!(s, "targets = {}", targets.join(", "));
        let _ = writeln!(s, "train_subjects = {}", x.train_subjects);
        let _ = writeln!(s, "test_subjects = {}", x.test_subjects);
        let _ = writeln!(s, "max_seconds = {}", x.max_seconds);
        s
    }
}
