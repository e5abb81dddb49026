use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::annotation::{AnnotationEvent, BeatAnnotations};
use super::{EcgRecord, IngestError, RecordIdentity};

/// Column selector: header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty column reference".into());
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

/// Column mapping of a CSV ECG export.
///
/// Written as `key = value` lines:
///
/// ```text
/// value_column = ECG      # name or zero-based index (required)
/// has_header = true
/// delimiter = ,
/// scale = 1.0             # multiplier from file units to mV
/// time_column = time      # optional, must be strictly increasing
/// marker_column = beat    # optional 0/1 beat marker per row
/// beats_column = 0        # column of the separate beat-times file
/// beats_has_header = false
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub value_column: ColumnRef,
    pub has_header: bool,
    pub delimiter: u8,
    pub scale: f64,
    pub time_column: Option<ColumnRef>,
    pub marker_column: Option<ColumnRef>,
    pub beats_column: ColumnRef,
    pub beats_has_header: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            value_column: ColumnRef::Index(0),
            has_header: false,
            delimiter: b',',
            scale: 1.0,
            time_column: None,
            marker_column: None,
            beats_column: ColumnRef::Index(0),
            beats_has_header: false,
        }
    }
}

impl CsvSchema {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut schema = CsvSchema::default();
        let bad = |msg: String| IngestError::SchemaMismatch(msg);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let flag = |v: &str| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(bad(format!("{key}: expected a boolean, got '{v}'"))),
            };
            match key {
                "value_column" => schema.value_column = value.parse().map_err(bad)?,
                "has_header" => schema.has_header = flag(value)?,
                "delimiter" => {
                    schema.delimiter = match value {
                        "tab" | "\\t" => b'\t',
                        "semicolon" => b';',
                        v if v.len() == 1 => v.as_bytes()[0],
                        v => return Err(bad(format!("delimiter must be one character, got '{v}'"))),
                    }
                }
                "scale" => {
                    schema.scale = value
                        .parse()
                        .map_err(|_| bad(format!("scale: not a number '{value}'")))?
                }
                "time_column" => schema.time_column = Some(value.parse().map_err(bad)?),
                "marker_column" => schema.marker_column = Some(value.parse().map_err(bad)?),
                "beats_column" => schema.beats_column = value.parse().map_err(bad)?,
                "beats_has_header" => schema.beats_has_header = flag(value)?,
                other => return Err(bad(format!("unknown schema key '{other}'"))),
            }
        }
        Ok(schema)
    }
}

fn resolve_column(
    col: &ColumnRef,
    headers: Option<&csv::StringRecord>,
    width: usize,
) -> Result<usize, IngestError> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => headers
            .and_then(|h| h.iter().position(|f| f.trim() == name))
            .ok_or_else(|| IngestError::SchemaMismatch(format!("no column named '{name}'")))?,
    };
    if idx >= width {
        return Err(IngestError::SchemaMismatch(format!(
            "column {idx} out of range ({width} columns)"
        )));
    }
    Ok(idx)
}

fn read_rows(path: &Path, has_header: bool, delimiter: u8) -> Result<(Option<csv::StringRecord>, Vec<csv::StringRecord>), IngestError> {
    let text = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_slice());
    let headers = if has_header {
        Some(
            reader
                .headers()
                .map_err(|e| IngestError::SchemaMismatch(format!("{}: {e}", path.display())))?
                .clone(),
        )
    } else {
        None
    };
    let rows = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IngestError::SchemaMismatch(format!("{}: {e}", path.display())))?;
    Ok((headers, rows))
}

fn parse_number(field: &str, row: usize, what: &str) -> Result<f64, IngestError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| IngestError::SchemaMismatch(format!("row {row}: {what} '{field}' is not a finite number")))
}

/// Reads a CSV ECG export. Beats come either from the schema's marker
/// column or from `beats_file` (beat times in seconds, rounded to the
/// nearest sample); with neither, the annotations are empty.
pub fn ingest_csv(
    path: &Path,
    schema: &CsvSchema,
    fs: f64,
    beats_file: Option<&Path>,
    identity: RecordIdentity,
) -> Result<(EcgRecord, BeatAnnotations), IngestError> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(IngestError::SchemaMismatch(format!("sampling rate must be positive, got {fs}")));
    }
    let (headers, rows) = read_rows(path, schema.has_header, schema.delimiter)?;
    let width = rows
        .first()
        .map(|r| r.len())
        .or_else(|| headers.as_ref().map(|h| h.len()))
        .unwrap_or(0);
    let value_col = resolve_column(&schema.value_column, headers.as_ref(), width)?;
    let time_col = schema
        .time_column
        .as_ref()
        .map(|c| resolve_column(c, headers.as_ref(), width))
        .transpose()?;
    let marker_col = schema
        .marker_column
        .as_ref()
        .map(|c| resolve_column(c, headers.as_ref(), width))
        .transpose()?;

    let mut samples = Vec::with_capacity(rows.len());
    let mut events = Vec::new();
    let mut last_time = f64::NEG_INFINITY;
    for (row, rec) in rows.iter().enumerate() {
        let v = parse_number(&rec[value_col], row, "sample value")?;
        samples.push((v * schema.scale) as f32);
        if let Some(tc) = time_col {
            let t = parse_number(&rec[tc], row, "time")?;
            if t <= last_time {
                return Err(IngestError::NonMonotonicTime {
                    what: "time column".into(),
                    row,
                });
            }
            last_time = t;
        }
        if let Some(mc) = marker_col {
            if parse_number(&rec[mc], row, "beat marker")? != 0.0 {
                events.push(AnnotationEvent {
                    sample: row as u64,
                    code: 1,
                });
            }
        }
    }

    if let Some(beats_path) = beats_file {
        if marker_col.is_some() {
            return Err(IngestError::SchemaMismatch(
                "beats given both as a marker column and as a file".into(),
            ));
        }
        let (bh, brows) = read_rows(beats_path, schema.beats_has_header, schema.delimiter)?;
        let bwidth = brows.first().map(|r| r.len()).unwrap_or(1);
        let col = resolve_column(&schema.beats_column, bh.as_ref(), bwidth)?;
        let mut last = f64::NEG_INFINITY;
        for (row, rec) in brows.iter().enumerate() {
            let t = parse_number(&rec[col], row, "beat time")?;
            if t <= last || t < 0.0 {
                return Err(IngestError::NonMonotonicTime {
                    what: format!("beat times ({})", beats_path.display()),
                    row,
                });
            }
            last = t;
            events.push(AnnotationEvent {
                sample: (t * fs).round() as u64,
                code: 1,
            });
        }
    }

    let record = EcgRecord::new(identity.record_id, identity.subject_id, identity.dataset_tag, fs, samples)?;
    Ok((record, BeatAnnotations::new(events)))
}
