//! Decoding of PhysioNet WFDB records (text headers, format 212/16 signal
//! files, MIT binary annotation files) and of CSV exports into in-memory
//! ECG records with beat annotations.

mod annotation;
mod csv;
mod header;
mod manifest;
mod signal;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::annotation::{
    code_for_symbol, symbol_for_code,
    filter_beats, parse_annotations, AnnotationEvent, BeatAnnotations, BeatCodeSet,
    AUX, CHN, NUM, SKIP, SUB,
};
pub use self::csv::{ingest_csv, ColumnRef, CsvSchema};
pub use self::header::{parse_header, SignalFormat, SignalSpec, WfdbHeader, DEFAULT_GAIN};
pub use self::manifest::{load_record, LoadedRecord, Manifest, ManifestEntry, RecordSource};
pub use self::signal::{decode_signal, encode_format212_pair};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported signal format {0} (only 212 and 16 are supported)")]
    UnsupportedFormat(u32),
    #[error("signal data truncated: need {needed} bytes, have {available}")]
    TruncatedData { needed: usize, available: usize },
    #[error("channel {channel} out of range for record with {n_signals} signals")]
    ChannelOutOfRange { channel: usize, n_signals: usize },
    #[error("annotation stream truncated at byte {0}")]
    TruncatedStream(usize),
    #[error("annotation time went negative at byte {0}")]
    NegativeTime(usize),
    #[error("annotation at sample {index} lies beyond the record end ({n_samples} samples)")]
    AnnotationOutOfRange { index: u64, n_samples: usize },
    #[error("CSV schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("non-monotonic time in {what} at row {row}")]
    NonMonotonicTime { what: String, row: usize },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("record {record}: {source}")]
    Record {
        record: String,
        #[source]
        source: Box<IngestError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_record(self, record: &str) -> Self {
        IngestError::Record {
            record: record.to_string(),
            source: Box::new(self),
        }
    }
}

/// Source population / device of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetTag {
    NormalSinus,
    LongTerm,
    Arrhythmia,
    BaselineFlexComp,
    BaselineComfTech,
    MovementComfTech,
}

impl DatasetTag {
    pub const ALL: [DatasetTag; 6] = [
        DatasetTag::NormalSinus,
        DatasetTag::LongTerm,
        DatasetTag::Arrhythmia,
        DatasetTag::BaselineFlexComp,
        DatasetTag::BaselineComfTech,
        DatasetTag::MovementComfTech,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetTag::NormalSinus => "NormalSinus",
            DatasetTag::LongTerm => "LongTerm",
            DatasetTag::Arrhythmia => "Arrhythmia",
            DatasetTag::BaselineFlexComp => "BaselineFlexComp",
            DatasetTag::BaselineComfTech => "BaselineComfTech",
            DatasetTag::MovementComfTech => "MovementComfTech",
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DatasetTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown dataset tag '{s}'"))
    }
}

/// Who a record belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordIdentity {
    pub record_id: String,
    pub subject_id: String,
    pub dataset_tag: DatasetTag,
}

/// One record's continuous single-lead ECG in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub subject_id: String,
    pub dataset_tag: DatasetTag,
    pub fs: f64,
    pub samples: Vec<f32>,
}

impl EcgRecord {
    pub fn new(
        record_id: impl Into<String>,
        subject_id: impl Into<String>,
        dataset_tag: DatasetTag,
        fs: f64,
        samples: Vec<f32>,
    ) -> Result<Self, IngestError> {
        let record = EcgRecord {
            record_id: record_id.into(),
            subject_id: subject_id.into(),
            dataset_tag,
            fs,
            samples,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.samples.is_empty() {
            return Err(IngestError::InvalidRecord(format!("{}: no samples", self.record_id)));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(IngestError::InvalidRecord(format!(
                "{}: sampling rate {} is not positive",
                self.record_id, self.fs
            )));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::InvalidRecord(format!(
                "{}: non-finite sample at index {i}",
                self.record_id
            )));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}
