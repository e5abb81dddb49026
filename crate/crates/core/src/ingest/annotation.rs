use std::fmt;
use std::str::FromStr;

use super::IngestError;

/// Pseudo-annotation codes of the MIT annotation format.
pub const SKIP: u8 = 59;
pub const NUM: u8 = 60;
pub const SUB: u8 = 61;
pub const CHN: u8 = 62;
pub const AUX: u8 = 63;

/// Annotation mnemonics indexed by code (MIT/WFDB table).
const SYMBOLS: [(&str, u8); 40] = [
    ("N", 1), ("L", 2), ("R", 3), ("a", 4), ("V", 5), ("F", 6), ("J", 7), ("A", 8),
    ("S", 9), ("E", 10), ("j", 11), ("/", 12), ("Q", 13), ("~", 14), ("|", 16),
    ("s", 18), ("T", 19), ("*", 20), ("D", 21), ("\"", 22), ("=", 23), ("p", 24),
    ("B", 25), ("^", 26), ("t", 27), ("+", 28), ("u", 29), ("?", 30), ("!", 31),
    ("[", 32), ("]", 33), ("e", 34), ("n", 35), ("@", 36), ("x", 37), ("f", 38),
    ("(", 39), (")", 40), ("r", 41), ("NOTQRS", 0),
];

pub fn code_for_symbol(symbol: &str) -> Option<u8> {
    SYMBOLS.iter().find(|(s, _)| *s == symbol).map(|&(_, c)| c)
}

pub fn symbol_for_code(code: u8) -> Option<&'static str> {
    SYMBOLS.iter().find(|(_, c)| *c == code).map(|&(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationEvent {
    pub sample: u64,
    pub code: u8,
}

/// Annotation events of one record in file order (non-decreasing sample index).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeatAnnotations {
    pub events: Vec<AnnotationEvent>,
}

impl BeatAnnotations {
    pub fn new(events: Vec<AnnotationEvent>) -> Self {
        Self { events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Checks that every event lies inside a record of `n_samples` samples.
    pub fn check_within(&self, n_samples: usize) -> Result<(), IngestError> {
        match self.events.iter().find(|e| e.sample >= n_samples as u64) {
            Some(e) => Err(IngestError::AnnotationOutOfRange {
                index: e.sample,
                n_samples,
            }),
            None => Ok(()),
        }
    }
}

/// Set of annotation codes treated as heart beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeatCodeSet(u64);

impl BeatCodeSet {
    /// The conventional WFDB beat family.
    pub const STANDARD_SYMBOLS: &'static str = "N,L,R,B,A,a,J,S,V,r,F,e,j,n,E,f,Q,?";

    pub fn from_codes(codes: impl IntoIterator<Item = u8>) -> Self {
        BeatCodeSet(codes.into_iter().filter(|&c| c < 64).fold(0, |acc, c| acc | (1 << c)))
    }

    pub fn contains(&self, code: u8) -> bool {
        code < 64 && self.0 & (1 << code) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn codes(&self) -> impl Iterator<Item = u8> + '_ {
        (0u8..64).filter(move |&c| self.contains(c))
    }
}

impl Default for BeatCodeSet {
    fn default() -> Self {
        Self::STANDARD_SYMBOLS.parse().expect("standard beat symbols are valid")
    }
}

impl FromStr for BeatCodeSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let codes = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| code_for_symbol(t).ok_or_else(|| format!("unknown annotation symbol '{t}'")))
            .collect::<Result<Vec<_>, _>>()?;
        let set = BeatCodeSet::from_codes(codes);
        if set.is_empty() {
            return Err("beat code set is empty".into());
        }
        Ok(set)
    }
}

impl fmt::Display for BeatCodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbols: Vec<&str> = self.codes().filter_map(symbol_for_code).collect();
        f.write_str(&symbols.join(","))
    }
}

/// Decodes an MIT-format annotation stream.
///
/// Each 16-bit little-endian word holds a 6-bit code and a 10-bit sample
/// increment. `SKIP` is followed by a 32-bit increment stored high word
/// first; `NUM`/`SUB`/`CHN` modify the previous annotation and are ignored;
/// `AUX` is followed by an even-padded payload that is skipped. The zero
/// word terminates the stream. `fs` is only used to reject nonsensical
/// sampling rates.
pub fn parse_annotations(raw: &[u8], fs: f64) -> Result<BeatAnnotations, IngestError> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(IngestError::InvalidRecord(format!("annotation sampling rate {fs}")));
    }
    let mut events = Vec::new();
    let mut time: i64 = 0;
    let mut pos = 0usize;

    while pos < raw.len() {
        if pos + 2 > raw.len() {
            return Err(IngestError::TruncatedStream(pos));
        }
        let word = u16::from_le_bytes([raw[pos], raw[pos + 1]]);
        if word == 0 {
            break;
        }
        let code = (word >> 10) as u8;
        let interval = (word & 0x03FF) as i64;
        match code {
            SKIP => {
                let b = raw.get(pos + 2..pos + 6).ok_or(IngestError::TruncatedStream(pos))?;
                let skip = ((b[0] as u32) << 16) | ((b[1] as u32) << 24) | b[2] as u32 | ((b[3] as u32) << 8);
                time += skip as i32 as i64;
                pos += 6;
            }
            NUM | SUB | CHN => pos += 2,
            AUX => {
                let len = interval as usize;
                let end = pos + 2 + len + (len & 1);
                if end > raw.len() {
                    return Err(IngestError::TruncatedStream(pos));
                }
                pos = end;
            }
            _ => {
                time += interval;
                if time < 0 {
                    return Err(IngestError::NegativeTime(pos));
                }
                events.push(AnnotationEvent {
                    sample: time as u64,
                    code,
                });
                pos += 2;
            }
        }
    }
    Ok(BeatAnnotations { events })
}

/// Sample indices of the beat annotations, strictly increasing.
pub fn filter_beats(annotations: &BeatAnnotations, beat_codes: &BeatCodeSet) -> Vec<u64> {
    let mut beats: Vec<u64> = Vec::new();
    for e in &annotations.events {
        if beat_codes.contains(e.code) && beats.last().is_none_or(|&last| e.sample > last) {
            beats.push(e.sample);
        }
    }
    beats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(code: u8, interval: u16) -> [u8; 2] {
        (((code as u16) << 10) | interval).to_le_bytes()
    }

    #[test]
    fn immediate_eof() {
        assert!(parse_annotations(&[0, 0], 360.0).unwrap().is_empty());
    }

    #[test]
    fn single_normal_beat() {
        let mut raw = word(1, 18).to_vec();
        raw.extend([0, 0]);
        let ann = parse_annotations(&raw, 250.0).unwrap();
        assert_eq!(ann.events, vec![AnnotationEvent { sample: 18, code: 1 }]);
    }

    #[test]
    fn pseudo_codes() {
        let mut raw = Vec::new();
        raw.extend(word(1, 100));
        raw.extend(word(SUB, 3));
        raw.extend(word(CHN, 1));
        raw.extend(word(NUM, 2));
        raw.extend(word(AUX, 3));
        raw.extend(b"(N\0\0");
        // skip 100000 samples: high word first
        raw.extend(word(SKIP, 0));
        raw.extend(1u16.to_le_bytes());
        raw.extend(0x86A0u16.to_le_bytes());
        raw.extend(word(5, 10));
        raw.extend([0, 0]);
        let ann = parse_annotations(&raw, 360.0).unwrap();
        assert_eq!(
            ann.events,
            vec![
                AnnotationEvent { sample: 100, code: 1 },
                AnnotationEvent { sample: 100_110, code: 5 },
            ]
        );
    }

    #[test]
    fn negative_skip_then_recover() {
        let mut raw = Vec::new();
        raw.extend(word(SKIP, 0));
        raw.extend(0xFFFFu16.to_le_bytes());
        raw.extend(0xFFFFu16.to_le_bytes());
        raw.extend(word(1, 1));
        raw.extend([0, 0]);
        let ann = parse_annotations(&raw, 360.0).unwrap();
        assert_eq!(ann.events, vec![AnnotationEvent { sample: 0, code: 1 }]);
    }

    #[test]
    fn negative_time_is_an_error() {
        let mut raw = Vec::new();
        raw.extend(word(SKIP, 0));
        raw.extend(0xFFFFu16.to_le_bytes());
        raw.extend(0xFFF0u16.to_le_bytes());
        raw.extend(word(1, 1));
        assert!(matches!(parse_annotations(&raw, 360.0), Err(IngestError::NegativeTime(6))));
    }

    #[test]
    fn truncation() {
        assert!(matches!(parse_annotations(&[1], 360.0), Err(IngestError::TruncatedStream(0))));
        let mut raw = word(AUX, 9).to_vec();
        raw.extend(b"abc");
        assert!(matches!(parse_annotations(&raw, 360.0), Err(IngestError::TruncatedStream(0))));
        let mut raw = word(SKIP, 0).to_vec();
        raw.extend([0, 0]);
        assert!(matches!(parse_annotations(&raw, 360.0), Err(IngestError::TruncatedStream(0))));
    }

    #[test]
    fn filter_keeps_beats_only() {
        let ann = BeatAnnotations::new(vec![
            AnnotationEvent { sample: 10, code: 1 },
            AnnotationEvent { sample: 20, code: 28 },
            AnnotationEvent { sample: 20, code: 14 },
        ]);
        assert_eq!(filter_beats(&ann, &BeatCodeSet::default()), vec![10]);
        assert!(filter_beats(&BeatAnnotations::default(), &BeatCodeSet::default()).is_empty());
    }

    #[test]
    fn filter_drops_coincident_duplicates() {
        let ann = BeatAnnotations::new(vec![
            AnnotationEvent { sample: 10, code: 1 },
            AnnotationEvent { sample: 10, code: 5 },
            AnnotationEvent { sample: 11, code: 5 },
        ]);
        assert_eq!(filter_beats(&ann, &BeatCodeSet::default()), vec![10, 11]);
    }

    #[test]
    fn beat_code_set_parsing() {
        let std = BeatCodeSet::default();
        assert_eq!(std.codes().count(), 18);
        assert!(std.contains(1) && std.contains(41) && !std.contains(12) && !std.contains(28));
        assert_eq!(std.to_string().parse::<BeatCodeSet>().unwrap(), std);
        assert!("N,xyz".parse::<BeatCodeSet>().is_err());
        assert!("".parse::<BeatCodeSet>().is_err());
    }
}
