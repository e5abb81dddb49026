//! Labeled 250-sample segments, subject-level train/test partitions and the
//! binary dataset cache.

mod builder;
mod cache;
mod segment;
mod split;
pub mod synthetic;

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DatasetTag, IngestError};

pub use self::builder::{build_from_records, build_subset, build_subset_from_records, BuildOptions, SubsetBuild};
pub use self::cache::{checksum64, content_hash, load_cache, save_cache, CACHE_MAGIC, CACHE_VERSION};
pub use self::segment::{
    label_window, resample_linear, resample_window, segment_record, window_count, BEAT_OFFSET_HI,
    BEAT_OFFSET_LO, RESAMPLE_HZ, SEGMENT_LEN, WINDOW_S,
};
pub use self::split::split_subjects;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("segment input needs at least 2 samples, got {0}")]
    SegmentTooShort(usize),
    #[error("need at least 2 subjects to split, got {0}")]
    TooFewSubjects(usize),
    #[error("corrupt dataset cache {path}: {reason}")]
    CorruptCache { path: PathBuf, reason: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NoBeat = 0,
    Beat = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::NoBeat),
            1 => Some(Label::Beat),
            _ => None,
        }
    }

    pub fn is_beat(self) -> bool {
        self == Label::Beat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Partition {
    Train,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "Train",
            Partition::Test => "Test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Partition::Train),
            "test" => Ok(Partition::Test),
            _ => Err(format!("unknown partition '{s}' (expected train or test)")),
        }
    }
}

/// The five evaluation subsets. NormalSinus and LongTerm records are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subset {
    NormalSinusLongTerm,
    Arrhythmia,
    BaselineFlexComp,
    BaselineComfTech,
    MovementComfTech,
}

impl Subset {
    pub const ALL: [Subset; 5] = [
        Subset::NormalSinusLongTerm,
        Subset::Arrhythmia,
        Subset::BaselineFlexComp,
        Subset::BaselineComfTech,
        Subset::MovementComfTech,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subset::NormalSinusLongTerm => "NormalSinus+LongTerm",
            Subset::Arrhythmia => "Arrhythmia",
            Subset::BaselineFlexComp => "Baseline FlexComp",
            Subset::BaselineComfTech => "Baseline ComfTech",
            Subset::MovementComfTech => "Movement ComfTech",
        }
    }

    /// File-name friendly identifier.
    pub fn slug(self) -> &'static str {
        match self {
            Subset::NormalSinusLongTerm => "normalsinus-longterm",
            Subset::Arrhythmia => "arrhythmia",
            Subset::BaselineFlexComp => "baseline-flexcomp",
            Subset::BaselineComfTech => "baseline-comftech",
            Subset::MovementComfTech => "movement-comftech",
        }
    }

    pub fn tags(self) -> &'static [DatasetTag] {
        match self {
            Subset::NormalSinusLongTerm => &[DatasetTag::NormalSinus, DatasetTag::LongTerm],
            Subset::Arrhythmia => &[DatasetTag::Arrhythmia],
            Subset::BaselineFlexComp => &[DatasetTag::BaselineFlexComp],
            Subset::BaselineComfTech => &[DatasetTag::BaselineComfTech],
            Subset::MovementComfTech => &[DatasetTag::MovementComfTech],
        }
    }

    pub fn cache_file_name(self, partition: Partition) -> String {
        format!("{}-{}.hbds", self.slug(), partition.as_str().to_ascii_lowercase())
    }

    pub fn cache_path(self, dir: &Path, partition: Partition) -> PathBuf {
        dir.join(self.cache_file_name(partition))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Subset::ALL
            .iter()
            .copied()
            .find(|sub| {
                let name: String = sub
                    .name()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                name == key
            })
            .ok_or_else(|| format!("unknown subset '{s}'"))
    }
}

/// One 0.25 s window resampled to 250 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub samples: [f32; SEGMENT_LEN],
    pub label: Label,
    pub record_id: Arc<str>,
    /// Seconds from record start; a multiple of 0.25.
    pub start_time: f64,
}

impl Segment {
    /// Identifier unique within a dataset: `record_id@start_time`.
    pub fn key(&self) -> String {
        format!("{}@{}", self.record_id, self.start_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub subset_name: String,
    pub partition: Partition,
    pub segments: Vec<Segment>,
    /// `(record_id, subject_id)` for every record contributing segments.
    pub records: Vec<(String, String)>,
}

impl LabeledDataset {
    pub fn new(subset_name: impl Into<String>, partition: Partition) -> Self {
        LabeledDataset {
            subset_name: subset_name.into(),
            partition,
            segments: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn subject_ids(&self) -> BTreeSet<String> {
        self.records.iter().map(|(_, s)| s.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.segments.iter().map(|s| s.label).collect()
    }

    /// Checks that every segment's record is registered with a subject.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let known: BTreeSet<&str> = self.records.iter().map(|(r, _)| r.as_str()).collect();
        if let Some(seg) = self.segments.iter().find(|s| !known.contains(&*s.record_id)) {
            return Err(DatasetError::Invalid(format!(
                "segment from unregistered record '{}'",
                seg.record_id
            )));
        }
        Ok(())
    }

    /// Keeps only records of the given subjects.
    pub fn restrict_to_subjects(&self, subjects: &BTreeSet<String>) -> LabeledDataset {
        let records: Vec<(String, String)> = self
            .records
            .iter()
            .filter(|(_, s)| subjects.contains(s))
            .cloned()
            .collect();
        let keep: BTreeSet<&str> = records.iter().map(|(r, _)| r.as_str()).collect();
        LabeledDataset {
            subset_name: self.subset_name.clone(),
            partition: self.partition,
            segments: self
                .segments
                .iter()
                .filter(|s| keep.contains(&*s.record_id))
                .cloned()
                .collect(),
            records,
        }
    }

    /// Keeps only segments starting before `seconds`.
    pub fn truncate_records(&self, seconds: f64) -> LabeledDataset {
        LabeledDataset {
            segments: self
                .segments
                .iter()
                .filter(|s| s.start_time + WINDOW_S <= seconds)
                .cloned()
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub n_segments: usize,
    pub n_beat: usize,
    pub percent_beat: f64,
}

pub fn class_stats(dataset: &LabeledDataset) -> ClassStats {
    let n_segments = dataset.segments.len();
    let n_beat = dataset.segments.iter().filter(|s| s.label.is_beat()).count();
    let percent_beat = if n_segments == 0 {
        0.0
    } else {
        100.0 * n_beat as f64 / n_segments as f64
    };
    ClassStats {
        n_segments,
        n_beat,
        percent_beat,
    }
}

/// One row of the dataset summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub subset: String,
    pub partition: String,
    pub n_subjects: usize,
    pub n_segments: usize,
    pub percent_beat: f64,
}

impl StatsRow {
    pub fn of(dataset: &LabeledDataset) -> Self {
        let stats = class_stats(dataset);
        StatsRow {
            subset: dataset.subset_name.clone(),
            partition: dataset.partition.to_string(),
            n_subjects: dataset.subject_ids().len(),
            n_segments: stats.n_segments,
            percent_beat: stats.percent_beat,
        }
    }
}

pub fn write_stats_csv(path: &Path, rows: &[StatsRow]) -> Result<(), DatasetError> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for row in rows {
            w.serialize(row)
                .map_err(|e| DatasetError::Invalid(e.to_string()))?;
        }
        if rows.is_empty() {
            w.write_record(["subset", "partition", "n_subjects", "n_segments", "percent_beat"])
                .map_err(|e| DatasetError::Invalid(e.to_string()))?;
        }
        w.flush().map_err(|e| DatasetError::io(path, e))?;
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| DatasetError::io(path, e))
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<StatsRow>, DatasetError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| DatasetError::Invalid(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<StatsRow>, _>>()
        .map_err(|e| DatasetError::Invalid(format!("{}: {e}", path.display())))
}
