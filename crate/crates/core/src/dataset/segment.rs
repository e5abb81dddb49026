use std::sync::Arc;

use super::{DatasetError, Label, Segment};
use crate::ingest::EcgRecord;

/// Window duration in seconds.
pub const WINDOW_S: f64 = 0.25;
/// Samples per segment after resampling.
pub const SEGMENT_LEN: usize = 250;
/// Output grid of the resampler.
pub const RESAMPLE_HZ: f64 = 1000.0;
/// A window is BEAT when a beat falls in `[t0 + LO, t0 + HI)`.
pub const BEAT_OFFSET_LO: f64 = 0.10;
pub const BEAT_OFFSET_HI: f64 = 0.15;

/// Labels the window starting at `t0` given ascending beat times.
pub fn label_window(t0: f64, beats: &[f64]) -> Label {
    let lo = t0 + BEAT_OFFSET_LO;
    let hi = t0 + BEAT_OFFSET_HI;
    let i = beats.partition_point(|&b| b < lo);
    if i < beats.len() && beats[i] < hi {
        Label::Beat
    } else {
        Label::NoBeat
    }
}

/// Linearly interpolates `samples` (rate `fs`, first sample at time 0) at
/// `t0 + k / 1000` s for every output slot `k`. Queries past the last input
/// sample take the last value.
pub fn resample_window(samples: &[f32], fs: f64, t0: f64, out: &mut [f32]) -> Result<(), DatasetError> {
    if samples.len() < 2 {
        return Err(DatasetError::SegmentTooShort(samples.len()));
    }
    let last = samples.len() - 1;
    let origin = t0 * fs;
    let step = fs / RESAMPLE_HZ;
    for (k, slot) in out.iter_mut().enumerate() {
        let mut x = origin + k as f64 * step;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            x = nearest;
        }
        let i = x.floor();
        *slot = if i >= last as f64 {
            samples[last]
        } else {
            let i = i.max(0.0) as usize;
            let frac = x - i as f64;
            let (a, b) = (samples[i] as f64, samples[i + 1] as f64);
            (a + frac * (b - a)) as f32
        };
    }
    Ok(())
}

/// Resamples a window that starts at the first input sample onto the
/// 1000 Hz grid.
pub fn resample_linear(samples: &[f32], fs_in: f64, n_out: usize) -> Result<Vec<f32>, DatasetError> {
    let mut out = vec![0.0; n_out];
    resample_window(samples, fs_in, 0.0, &mut out)?;
    Ok(out)
}

/// Number of complete windows in the first `max_duration` seconds.
pub fn window_count(duration: f64, max_duration: f64) -> usize {
    (duration.min(max_duration) / WINDOW_S + 1e-9).floor().max(0.0) as usize
}

/// Cuts a record into non-overlapping labeled windows, discarding the
/// trailing partial window.
pub fn segment_record(record: &EcgRecord, beat_times: &[f64], max_duration: f64) -> Result<Vec<Segment>, DatasetError> {
    if record.samples.len() < 2 {
        return Err(DatasetError::SegmentTooShort(record.samples.len()));
    }
    let n = window_count(record.duration_s(), max_duration);
    let record_id: Arc<str> = Arc::from(record.record_id.as_str());
    let mut segments = Vec::with_capacity(n);
    for w in 0..n {
        let t0 = w as f64 * WINDOW_S;
        let mut samples = [0.0f32; SEGMENT_LEN];
        resample_window(&record.samples, record.fs, t0, &mut samples)?;
        segments.push(Segment {
            samples,
            label: label_window(t0, beat_times),
            record_id: Arc::clone(&record_id),
            start_time: t0,
        });
    }
    Ok(segments)
}
