use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{segment_record, split_subjects, DatasetError, LabeledDataset, Partition, Segment, Subset};
use crate::ingest::{load_record, BeatCodeSet, EcgRecord, Manifest};

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub beat_codes: BeatCodeSet,
    /// Only the first `max_duration_s` seconds of each record are segmented.
    pub max_duration_s: f64,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            beat_codes: BeatCodeSet::default(),
            max_duration_s: 3600.0,
            train_fraction: 2.0 / 3.0,
            split_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetBuild {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

impl SubsetBuild {
    pub fn partition(&self, p: Partition) -> &LabeledDataset {
        match p {
            Partition::Train => &self.train,
            Partition::Test => &self.test,
        }
    }
}

struct RecordSegments {
    record_id: String,
    subject_id: String,
    segments: Vec<Segment>,
}

fn record_error(record: &str, e: DatasetError) -> DatasetError {
    DatasetError::Invalid(format!("record {record}: {e}"))
}

/// Loads, segments and partitions every manifest record belonging to
/// `subset`. Records are processed in parallel; output order follows the
/// manifest. Any record failure aborts the build.
pub fn build_subset(subset: Subset, manifest: &Manifest, opts: &BuildOptions) -> Result<SubsetBuild, DatasetError> {
    let entries: Vec<_> = manifest.entries_with_tags(subset.tags()).collect();
    if entries.is_empty() {
        return Err(DatasetError::Invalid(format!("manifest has no records for subset {subset}")));
    }
    let per_record = entries
        .par_iter()
        .map(|entry| {
            let loaded = load_record(entry, &opts.beat_codes)?;
            let segments = segment_record(&loaded.record, &loaded.beat_times(), opts.max_duration_s)
                .map_err(|e| record_error(&entry.identity.record_id, e))?;
            Ok(RecordSegments {
                record_id: entry.identity.record_id.clone(),
                subject_id: entry.identity.subject_id.clone(),
                segments,
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    assemble(subset.name(), per_record, opts)
}

/// Same as [`build_subset`] for records already in memory, each paired with
/// its ascending beat times in seconds.
pub fn build_subset_from_records(
    subset_name: &str,
    records: &[(EcgRecord, Vec<f64>)],
    opts: &BuildOptions,
) -> Result<SubsetBuild, DatasetError> {
    let per_record = records
        .par_iter()
        .map(|(record, beats)| {
            Ok(RecordSegments {
                record_id: record.record_id.clone(),
                subject_id: record.subject_id.clone(),
                segments: segment_record(record, beats, opts.max_duration_s)
                    .map_err(|e| record_error(&record.record_id, e))?,
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    assemble(subset_name, per_record, opts)
}

fn assemble(subset_name: &str, per_record: Vec<RecordSegments>, opts: &BuildOptions) -> Result<SubsetBuild, DatasetError> {
    let mut seen = BTreeSet::new();
    for r in &per_record {
        if !seen.insert(r.record_id.as_str()) {
            return Err(DatasetError::Invalid(format!("duplicate record id '{}'", r.record_id)));
        }
    }
    let subjects: Vec<&str> = per_record.iter().map(|r| r.subject_id.as_str()).collect();
    let (train_subjects, _) = split_subjects(&subjects, opts.train_fraction, opts.split_seed)?;

    let mut train = LabeledDataset::new(subset_name, Partition::Train);
    let mut test = LabeledDataset::new(subset_name, Partition::Test);
    for r in per_record {
        let target = if train_subjects.contains(&r.subject_id) {
            &mut train
        } else {
            &mut test
        };
        target.records.push((r.record_id, r.subject_id));
        target.segments.extend(r.segments);
    }
    Ok(SubsetBuild { train, test })
}

pub use build_subset_from_records as build_from_records;
