use super::header::{SignalFormat, WfdbHeader};
use super::IngestError;

#[inline]
fn sign_extend_12(v: u16) -> i32 {
    ((v << 4) as i16 >> 4) as i32
}

/// Decodes one channel of a signal file into millivolts.
///
/// `raw` is the whole content of the file holding `channel`; signals sharing
/// that file are interleaved frame by frame in header order.
pub fn decode_signal(raw: &[u8], header: &WfdbHeader, channel: usize) -> Result<Vec<f32>, IngestError> {
    if channel >= header.signals.len() {
        return Err(IngestError::ChannelOutOfRange {
            channel,
            n_signals: header.signals.len(),
        });
    }
    let group = header.file_group(channel);
    let spec = &header.signals[channel];
    if group.iter().any(|&i| header.signals[i].format != spec.format) {
        return Err(IngestError::MalformedHeader(format!(
            "signals in {} mix storage formats",
            spec.file_name
        )));
    }
    let stride = group.len();
    let position = group.iter().position(|&i| i == channel).unwrap_or(0);
    let offset = header.signals[group[0]].byte_offset;
    let total = header.n_samples * stride;

    let needed = offset
        + match spec.format {
            SignalFormat::Fmt212 => (3 * total).div_ceil(2),
            SignalFormat::Fmt16 => 2 * total,
        };
    if raw.len() < needed {
        return Err(IngestError::TruncatedData {
            needed,
            available: raw.len(),
        });
    }
    let data = &raw[offset..];
    let gain = spec.gain;
    let baseline = spec.baseline as f64;
    let to_mv = |adc: i32| ((adc as f64 - baseline) / gain) as f32;

    let out = (0..header.n_samples)
        .map(|frame| {
            let j = frame * stride + position;
            let adc = match spec.format {
                SignalFormat::Fmt212 => {
                    let base = 3 * (j / 2);
                    if j.is_multiple_of(2) {
                        let v = data[base] as u16 | ((data[base + 1] as u16 & 0x0F) << 8);
                        sign_extend_12(v)
                    } else {
                        let v = data[base + 2] as u16 | ((data[base + 1] as u16 & 0xF0) << 4);
                        sign_extend_12(v)
                    }
                }
                SignalFormat::Fmt16 => i16::from_le_bytes([data[2 * j], data[2 * j + 1]]) as i32,
            };
            to_mv(adc)
        })
        .collect();
    Ok(out)
}

/// Packs two 12-bit samples (each in `-2048..=2047`) the way format 212 does.
pub fn encode_format212_pair(s0: i16, s1: i16) -> [u8; 3] {
    let a = (s0 as u16) & 0x0FFF;
    let b = (s1 as u16) & 0x0FFF;
    [
        (a & 0xFF) as u8,
        (((a >> 8) & 0x0F) | ((b >> 8) << 4)) as u8,
        (b & 0xFF) as u8,
    ]
}
