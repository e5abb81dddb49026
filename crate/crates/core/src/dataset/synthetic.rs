//! Synthetic ECG-like records with known beat locations, for smoke runs and
//! tests that must not depend on downloaded data.

use crate::ingest::{DatasetTag, EcgRecord};
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_subjects: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub seed: u64,
    /// Standard deviation of additive white noise, mV.
    pub noise_mv: f64,
    /// Per-subject mean heart rate is drawn uniformly from this range (bpm).
    pub heart_rate: (f64, f64),
    pub tag: DatasetTag,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_subjects: 6,
            duration_s: 12.5,
            fs: 250.0,
            seed: 2021,
            noise_mv: 0.03,
            heart_rate: (55.0, 95.0),
            tag: DatasetTag::NormalSinus,
        }
    }
}

/// (offset from R peak in s, amplitude in mV, width in s)
const WAVES: [(f64, f64, f64); 5] = [
    (-0.16, 0.12, 0.025),
    (-0.025, -0.10, 0.008),
    (0.0, 1.0, 0.010),
    (0.03, -0.20, 0.010),
    (0.30, 0.30, 0.050),
];

/// One record and its beat (R peak) times in seconds.
pub fn synthetic_record(
    record_id: &str,
    subject_id: &str,
    spec: &SyntheticSpec,
    rng: &mut Prng,
) -> (EcgRecord, Vec<f64>) {
    let n = (spec.duration_s * spec.fs).round() as usize;
    let hr = rng.uniform_range(spec.heart_rate.0, spec.heart_rate.1);
    let r_amp = rng.uniform_range(0.8, 1.4);
    let mean_rr = 60.0 / hr;

    let mut beats = Vec::new();
    let mut t = rng.uniform_range(0.1, mean_rr);
    while t < spec.duration_s {
        beats.push(t);
        let rr = mean_rr * (1.0 + 0.05 * rng.normal());
        t += rr.clamp(0.3, 2.0);
    }

    let wander_phase = rng.uniform_range(0.0, std::f64::consts::TAU);
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / spec.fs;
            0.1 * (std::f64::consts::TAU * 0.25 * t + wander_phase).sin() + spec.noise_mv * rng.normal()
        })
        .collect();
    for &b in &beats {
        let lo = (((b - 0.4) * spec.fs).floor().max(0.0)) as usize;
        let hi = (((b + 0.6) * spec.fs).ceil() as usize).min(n);
        for (i, s) in samples.iter_mut().enumerate().take(hi).skip(lo) {
            let t = i as f64 / spec.fs;
            for &(offset, amp, width) in &WAVES {
                let amp = if offset == 0.0 { amp * r_amp } else { amp };
                let z = (t - b - offset) / width;
                *s += amp * (-0.5 * z * z).exp();
            }
        }
    }

    let record = EcgRecord {
        record_id: record_id.to_string(),
        subject_id: subject_id.to_string(),
        dataset_tag: spec.tag,
        fs: spec.fs,
        samples: samples.into_iter().map(|v| v as f32).collect(),
    };
    (record, beats)
}

/// One record per subject, named `syn<NN>`.
pub fn synthetic_records(spec: &SyntheticSpec) -> Vec<(EcgRecord, Vec<f64>)> {
    (0..spec.n_subjects)
        .map(|i| {
            let id = format!("syn{i:02}");
            let mut rng = Prng::substream(spec.seed, i as u64);
            synthetic_record(&id, &id, spec, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beats_inside_record_and_plausible_rate() {
        let spec = SyntheticSpec {
            duration_s: 60.0,
            ..SyntheticSpec::default()
        };
        for (rec, beats) in synthetic_records(&spec) {
            assert_eq!(rec.samples.len(), 15_000);
            assert!(rec.validate().is_ok());
            assert!(beats.windows(2).all(|w| w[0] < w[1]));
            assert!(beats.iter().all(|&b| (0.0..60.0).contains(&b)));
            assert!((40..=110).contains(&beats.len()), "{} beats", beats.len());
        }
    }

    #[test]
    fn r_peak_dominates() {
        let (rec, beats) = synthetic_record("a", "a", &SyntheticSpec::default(), &mut Prng::seed_from_u64(1));
        let i = (beats[1] * rec.fs).round() as usize;
        let peak = rec.samples[i];
        let baseline = rec.samples[i + (0.2 * rec.fs) as usize];
        assert!(peak - baseline > 0.5);
    }
}
