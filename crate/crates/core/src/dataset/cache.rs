//! Binary dataset cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "HBDS" | u32 version
//! u32 len, subset name (UTF-8) | u8 partition (0 = Train, 1 = Test)
//! u32 n_records, then per record: u32 len, record id, u32 len, subject id
//! u64 n_segments, then per segment:
//!     u32 record index | u32 window index | u8 label | 250 x f32 samples
//! u64 checksum: first 8 bytes of SHA-256 over everything above
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{DatasetError, Label, LabeledDataset, Partition, Segment, SEGMENT_LEN, WINDOW_S};

pub const CACHE_MAGIC: &[u8; 4] = b"HBDS";
pub const CACHE_VERSION: u32 = 1;

struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn checksum64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

pub fn save_cache(dataset: &LabeledDataset, path: &Path) -> Result<(), DatasetError> {
    dataset.validate()?;
    let io = |e| DatasetError::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut w = HashingWriter {
        inner: BufWriter::new(file),
        hasher: Sha256::new(),
    };
    let index: HashMap<&str, u32> = dataset
        .records
        .iter()
        .enumerate()
        .map(|(i, (r, _))| (r.as_str(), i as u32))
        .collect();

    let body = (|| -> std::io::Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        write_str(&mut w, &dataset.subset_name)?;
        w.write_all(&[match dataset.partition {
            Partition::Train => 0,
            Partition::Test => 1,
        }])?;
        w.write_all(&(dataset.records.len() as u32).to_le_bytes())?;
        for (record, subject) in &dataset.records {
            write_str(&mut w, record)?;
            write_str(&mut w, subject)?;
        }
        w.write_all(&(dataset.segments.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(9 + 4 * SEGMENT_LEN);
        for seg in &dataset.segments {
            buf.clear();
            buf.extend(index[&*seg.record_id].to_le_bytes());
            buf.extend(((seg.start_time / WINDOW_S).round() as u32).to_le_bytes());
            buf.push(seg.label as u8);
            for v in &seg.samples {
                buf.extend(v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    })();
    body.map_err(io)?;
    let digest = w.hasher.finalize_reset();
    let sum = u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"));
    w.inner.write_all(&sum.to_le_bytes()).map_err(io)?;
    w.inner.flush().map_err(io)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!("unexpected end of data at byte {}", self.pos)),
        }
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| "invalid UTF-8 string".to_string())
    }
}

pub fn load_cache(path: &Path) -> Result<LabeledDataset, DatasetError> {
    let data = std::fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    parse_cache(&data).map_err(|reason| DatasetError::CorruptCache {
        path: path.to_path_buf(),
        reason,
    })
}

fn parse_cache(data: &[u8]) -> Result<LabeledDataset, String> {
    if data.len() < 4 + 4 + 8 || &data[..4] != CACHE_MAGIC {
        return Err("bad magic".into());
    }
    let (body, tail) = data.split_at(data.len() - 8);
    if checksum64(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
        return Err("checksum mismatch".into());
    }
    let mut c = Cursor { data: body, pos: 4 };
    let version = c.u32()?;
    if version != CACHE_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let subset_name = c.string()?;
    let partition = match c.u8()? {
        0 => Partition::Train,
        1 => Partition::Test,
        p => return Err(format!("bad partition tag {p}")),
    };
    let n_records = c.u32()? as usize;
    let mut records = Vec::with_capacity(n_records.min(1 << 16));
    for _ in 0..n_records {
        records.push((c.string()?, c.string()?));
    }
    let ids: Vec<Arc<str>> = records.iter().map(|(r, _)| Arc::from(r.as_str())).collect();
    let n_segments = c.u64()? as usize;
    let per_segment = 9 + 4 * SEGMENT_LEN;
    if body.len() - c.pos != n_segments.saturating_mul(per_segment) {
        return Err("segment block length does not match segment count".into());
    }
    let mut segments = Vec::with_capacity(n_segments);
    for _ in 0..n_segments {
        let rec = c.u32()? as usize;
        let window = c.u32()?;
        let label = Label::from_index(c.u8()? as usize).ok_or("bad label")?;
        let raw = c.take(4 * SEGMENT_LEN)?;
        let mut samples = [0.0f32; SEGMENT_LEN];
        for (s, chunk) in samples.iter_mut().zip(raw.chunks_exact(4)) {
            *s = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        segments.push(Segment {
            samples,
            label,
            record_id: Arc::clone(ids.get(rec).ok_or("record index out of range")?),
            start_time: window as f64 * WINDOW_S,
        });
    }
    Ok(LabeledDataset {
        subset_name,
        partition,
        segments,
        records,
    })
}

/// Git-style content hash of a file: SHA-256 of `"blob <len>\0" + content`,
/// hex encoded.
pub fn content_hash(path: &Path) -> Result<String, DatasetError> {
    let data = std::fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", data.len()).as_bytes());
    h.update(&data);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
