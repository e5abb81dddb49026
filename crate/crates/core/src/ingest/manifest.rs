use std::fs;
use std::path::{Path, PathBuf};

use super::annotation::{filter_beats, parse_annotations, BeatAnnotations, BeatCodeSet};
use super::csv::{ingest_csv, CsvSchema};
use super::header::parse_header;
use super::signal::decode_signal;
use super::{DatasetTag, EcgRecord, IngestError, RecordIdentity};

#[derive(Debug, Clone, PartialEq)]
pub enum RecordSource {
    Wfdb {
        header: PathBuf,
        annotations: PathBuf,
    },
    Csv {
        csv: PathBuf,
        schema: PathBuf,
        fs: f64,
        beats: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub identity: RecordIdentity,
    pub source: RecordSource,
    pub channel: usize,
    pub line: usize,
}

/// Batch-ingestion manifest: one record per line, whitespace-separated
/// `key=value` pairs. `#` starts a comment.
///
/// ```text
/// record_id=100 subject_id=100 dataset_tag=Arrhythmia header=mitdb/100.hea annotations=mitdb/100.atr
/// record_id=16265 subject_id=16265 dataset_tag=NormalSinus header=nsrdb/16265.hea annotations=nsrdb/16265.atr channel=0
/// record_id=S01 subject_id=S01 dataset_tag=BaselineFlexComp csv=wcs/S01.csv schema=wcs/flex.schema fs=2048 beats=wcs/S01_beats.csv
/// ```
///
/// Relative paths resolve against the manifest's base directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Reads a manifest file. Relative paths resolve against `data_root`
    /// when given, otherwise against the manifest's directory.
    pub fn load(path: &Path, data_root: Option<&Path>) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
        let base = match data_root {
            Some(root) => root.to_path_buf(),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, IngestError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| IngestError::Manifest {
                line: line_no,
                message,
            };
            let mut get = Fields::default();
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key=value, got '{tok}'")))?;
                get.set(k, v).map_err(&err)?;
            }
            let need = |v: Option<String>, key: &str| v.ok_or_else(|| err(format!("missing '{key}'")));
            let identity = RecordIdentity {
                record_id: need(get.record_id.clone(), "record_id")?,
                subject_id: need(get.subject_id.clone(), "subject_id")?,
                dataset_tag: need(get.dataset_tag.clone(), "dataset_tag")?
                    .parse::<DatasetTag>()
                    .map_err(&err)?,
            };
            let path = |p: String| base_dir.join(p);
            let source = match (get.header.clone(), get.csv.clone()) {
                (Some(h), None) => RecordSource::Wfdb {
                    header: path(h),
                    annotations: path(need(get.annotations.clone(), "annotations")?),
                },
                (None, Some(c)) => {
                    let fs_text = need(get.fs.clone(), "fs")?;
                    RecordSource::Csv {
                        csv: path(c),
                        schema: path(need(get.schema.clone(), "schema")?),
                        fs: fs_text
                            .parse()
                            .map_err(|_| err(format!("bad fs '{fs_text}'")))?,
                        beats: get.beats.clone().map(path),
                    }
                }
                _ => return Err(err("exactly one of 'header' or 'csv' is required".into())),
            };
            let channel = match &get.channel {
                Some(c) => c.parse().map_err(|_| err(format!("bad channel '{c}'")))?,
                None => 0,
            };
            entries.push(ManifestEntry {
                identity,
                source,
                channel,
                line: line_no,
            });
        }
        Ok(Manifest {
            base_dir: base_dir.to_path_buf(),
            entries,
        })
    }

    pub fn entries_with_tags<'a>(&'a self, tags: &'a [DatasetTag]) -> impl Iterator<Item = &'a ManifestEntry> + 'a {
        self.entries
            .iter()
            .filter(move |e| tags.contains(&e.identity.dataset_tag))
    }
}

#[derive(Default)]
struct Fields {
    record_id: Option<String>,
    subject_id: Option<String>,
    dataset_tag: Option<String>,
    header: Option<String>,
    annotations: Option<String>,
    csv: Option<String>,
    schema: Option<String>,
    fs: Option<String>,
    beats: Option<String>,
    channel: Option<String>,
}

impl Fields {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let slot = match key {
            "record_id" => &mut self.record_id,
            "subject_id" => &mut self.subject_id,
            "dataset_tag" => &mut self.dataset_tag,
            "header" => &mut self.header,
            "annotations" => &mut self.annotations,
            "csv" => &mut self.csv,
            "schema" => &mut self.schema,
            "fs" => &mut self.fs,
            "beats" => &mut self.beats,
            "channel" => &mut self.channel,
            other => return Err(format!("unknown key '{other}'")),
        };
        if slot.replace(value.to_string()).is_some() {
            return Err(format!("duplicate key '{key}'"));
        }
        Ok(())
    }
}

/// A decoded record plus its full annotation stream and beat locations.
#[derive(Debug, Clone)]
pub struct LoadedRecord {
    pub record: EcgRecord,
    pub annotations: BeatAnnotations,
    /// Beat sample indices, strictly increasing.
    pub beats: Vec<u64>,
}

impl LoadedRecord {
    pub fn beat_times(&self) -> Vec<f64> {
        self.beats
            .iter()
            .map(|&b| b as f64 / self.record.fs)
            .collect()
    }
}

/// Decodes the record an entry points at. Errors carry the record id.
pub fn load_record(entry: &ManifestEntry, beat_codes: &BeatCodeSet) -> Result<LoadedRecord, IngestError> {
    let id = &entry.identity.record_id;
    load_record_inner(entry, beat_codes).map_err(|e| e.in_record(id))
}

fn load_record_inner(entry: &ManifestEntry, beat_codes: &BeatCodeSet) -> Result<LoadedRecord, IngestError> {
    let (record, annotations) = match &entry.source {
        RecordSource::Wfdb {
            header,
            annotations,
        } => {
            let text = fs::read_to_string(header).map_err(|e| IngestError::io(header, e))?;
            let hea = parse_header(&text)?;
            if entry.channel >= hea.n_signals {
                return Err(IngestError::ChannelOutOfRange {
                    channel: entry.channel,
                    n_signals: hea.n_signals,
                });
            }
            let dir = header.parent().unwrap_or(Path::new(""));
            let dat = dir.join(&hea.signals[entry.channel].file_name);
            let raw = fs::read(&dat).map_err(|e| IngestError::io(&dat, e))?;
            let samples = decode_signal(&raw, &hea, entry.channel)?;
            let raw_ann = fs::read(annotations).map_err(|e| IngestError::io(annotations, e))?;
            let ann = parse_annotations(&raw_ann, hea.fs)?;
            let id = &entry.identity;
            let record = EcgRecord::new(&id.record_id, &id.subject_id, id.dataset_tag, hea.fs, samples)?;
            (record, ann)
        }
        RecordSource::Csv {
            csv,
            schema,
            fs: rate,
            beats,
        } => {
            let text = fs::read_to_string(schema).map_err(|e| IngestError::io(schema, e))?;
            let schema = CsvSchema::parse(&text)?;
            ingest_csv(csv, &schema, *rate, beats.as_deref(), entry.identity.clone())?
        }
    };
    annotations.check_within(record.samples.len())?;
    let beats = filter_beats(&annotations, beat_codes);
    Ok(LoadedRecord {
        record,
        annotations,
        beats,
    })
}
