use super::IngestError;

/// Gain assumed when a header omits it or declares 0 (ADC units per mV).
pub const DEFAULT_GAIN: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    /// Two 12-bit two's-complement samples packed into three bytes.
    Fmt212,
    /// Little-endian 16-bit two's complement.
    Fmt16,
}

impl SignalFormat {
    pub fn code(self) -> u32 {
        match self {
            SignalFormat::Fmt212 => 212,
            SignalFormat::Fmt16 => 16,
        }
    }

    fn from_code(code: u32) -> Result<Self, IngestError> {
        match code {
            212 => Ok(SignalFormat::Fmt212),
            16 => Ok(SignalFormat::Fmt16),
            other => Err(IngestError::UnsupportedFormat(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: SignalFormat,
    /// Byte offset of the first sample in the signal file.
    pub byte_offset: usize,
    /// ADC units per physical unit; always > 0.
    pub gain: f64,
    pub baseline: i32,
    pub units: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfdbHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub fs: f64,
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

impl WfdbHeader {
    /// Indices of the signals stored in the same file as `channel`, in
    /// header order. Samples of these signals are interleaved frame by frame.
    pub fn file_group(&self, channel: usize) -> Vec<usize> {
        let name = &self.signals[channel].file_name;
        (0..self.signals.len())
            .filter(|&i| &self.signals[i].file_name == name)
            .collect()
    }
}

fn malformed(msg: impl Into<String>) -> IngestError {
    IngestError::MalformedHeader(msg.into())
}

/// Parses a single-segment WFDB header (`.hea`).
pub fn parse_header(text: &str) -> Result<WfdbHeader, IngestError> {
    let mut lines = text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let record_line = lines.next().ok_or_else(|| malformed("empty header"))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(malformed(format!(
            "record line needs name, signal count, sampling rate and length: '{record_line}'"
        )));
    }
    let record_name = fields[0];
    if record_name.contains('/') {
        return Err(malformed(format!("multi-segment record '{record_name}' is not supported")));
    }
    let n_signals: usize = fields[1]
        .parse()
        .map_err(|_| malformed(format!("bad signal count '{}'", fields[1])))?;
    if n_signals == 0 {
        return Err(malformed("record declares no signals"));
    }
    let fs_token = fields[2].split(['/', '(']).next().unwrap_or_default();
    let fs: f64 = fs_token
        .parse()
        .map_err(|_| malformed(format!("bad sampling frequency '{}'", fields[2])))?;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(malformed(format!("sampling frequency must be positive, got {fs}")));
    }
    let n_samples: usize = fields[3]
        .parse()
        .map_err(|_| malformed(format!("bad sample count '{}'", fields[3])))?;

    let mut signals = Vec::with_capacity(n_signals);
    for line in lines.by_ref().take(n_signals) {
        signals.push(parse_signal_line(line)?);
    }
    if signals.len() != n_signals {
        return Err(malformed(format!(
            "expected {n_signals} signal lines, found {}",
            signals.len()
        )));
    }

    Ok(WfdbHeader {
        record_name: record_name.to_string(),
        n_signals,
        fs,
        n_samples,
        signals,
    })
}

fn parse_signal_line(line: &str) -> Result<SignalSpec, IngestError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(malformed(format!("signal line needs a file name and format: '{line}'")));
    }
    let file_name = fields[0].to_string();
    let (format, byte_offset) = parse_format_token(fields[1])?;

    let (mut gain, mut baseline, mut units) = (0.0f64, None, "mV".to_string());
    if let Some(tok) = fields.get(2) {
        let (gain_part, unit_part) = match tok.split_once('/') {
            Some((g, u)) => (g, Some(u)),
            None => (*tok, None),
        };
        let (gain_str, base_str) = match gain_part.split_once('(') {
            Some((g, b)) => (g, Some(b.trim_end_matches(')'))),
            None => (gain_part, None),
        };
        gain = gain_str
            .parse()
            .map_err(|_| malformed(format!("bad gain '{tok}'")))?;
        if let Some(b) = base_str {
            baseline = Some(
                b.parse::<i32>()
                    .map_err(|_| malformed(format!("bad baseline '{tok}'")))?,
            );
        }
        if let Some(u) = unit_part {
            units = u.to_string();
        }
    }
    if !gain.is_finite() || gain < 0.0 {
        return Err(malformed(format!("gain must be non-negative, got {gain}")));
    }
    if gain == 0.0 {
        gain = DEFAULT_GAIN;
    }
    // adc resolution at [3], adc zero at [4]
    if baseline.is_none() {
        if let Some(zero) = fields.get(4) {
            baseline = Some(
                zero.parse()
                    .map_err(|_| malformed(format!("bad ADC zero '{zero}'")))?,
            );
        }
    }
    let description = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        String::new()
    };

    Ok(SignalSpec {
        file_name,
        format,
        byte_offset,
        gain,
        baseline: baseline.unwrap_or(0),
        units,
        description,
    })
}

/// `format[xspf][:skew][+offset]`
fn parse_format_token(tok: &str) -> Result<(SignalFormat, usize), IngestError> {
    let digits_end = tok.find(|c: char| !c.is_ascii_digit()).unwrap_or(tok.len());
    let code: u32 = tok[..digits_end]
        .parse()
        .map_err(|_| malformed(format!("bad format field '{tok}'")))?;
    let format = SignalFormat::from_code(code)?;

    let mut rest = &tok[digits_end..];
    let mut byte_offset = 0;
    if let Some(spf) = rest.strip_prefix('x') {
        let end = spf.find([':', '+']).unwrap_or(spf.len());
        if &spf[..end] != "1" {
            return Err(malformed(format!("multi-frequency signal '{tok}' is not supported")));
        }
        rest = &spf[end..];
    }
    if let Some(skew) = rest.strip_prefix(':') {
        let end = skew.find('+').unwrap_or(skew.len());
        rest = &skew[end..];
    }
    if let Some(off) = rest.strip_prefix('+') {
        byte_offset = off
            .parse()
            .map_err(|_| malformed(format!("bad byte offset in '{tok}'")))?;
    } else if !rest.is_empty() {
        return Err(malformed(format!("bad format field '{tok}'")));
    }
    Ok((format, byte_offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_header() {
        let h = parse_header("X 1 250 1000\nX.dat 16\n").unwrap();
        assert_eq!(h.record_name, "X");
        assert_eq!(h.n_signals, 1);
        assert_eq!(h.fs, 250.0);
        assert_eq!(h.n_samples, 1000);
        assert_eq!(h.signals[0].format, SignalFormat::Fmt16);
        assert_eq!(h.signals[0].gain, DEFAULT_GAIN);
        assert_eq!(h.signals[0].baseline, 0);
    }

    #[test]
    fn mitdb_style_header() {
        let text = "100 2 360 650000\n\
                    100.dat 212 200 11 1024 995 -22131 0 MLII\n\
                    100.dat 212 200 11 1024 1011 20052 0 V5\n\
                    # 69 M 1085 1629 x1\n";
        let h = parse_header(text).unwrap();
        assert_eq!((h.n_signals, h.fs, h.n_samples), (2, 360.0, 650000));
        assert_eq!(h.signals[0].baseline, 1024);
        assert_eq!(h.signals[1].description, "V5");
        assert_eq!(h.file_group(1), vec![0, 1]);
    }

    #[test]
    fn gain_with_baseline_and_units() {
        let h = parse_header("r 1 128 10\nr.dat 212 200.0(-3)/uV 12 0 0 0 0 ECG lead\n").unwrap();
        let s = &h.signals[0];
        assert_eq!(s.gain, 200.0);
        assert_eq!(s.baseline, -3);
        assert_eq!(s.units, "uV");
        assert_eq!(s.description, "ECG lead");
    }

    #[test]
    fn zero_gain_becomes_default() {
        let h = parse_header("r 1 128 10\nr.dat 16 0 16 5\n").unwrap();
        assert_eq!(h.signals[0].gain, 200.0);
        assert_eq!(h.signals[0].baseline, 5);
    }

    #[test]
    fn comments_and_blank_lines_tolerated() {
        let h = parse_header("# leading comment\n\nr 1 128/1(0) 10 0:0:0\n\n# c\nr.dat 16+512\n").unwrap();
        assert_eq!(h.fs, 128.0);
        assert_eq!(h.signals[0].byte_offset, 512);
    }

    #[test]
    fn rejects_format_8() {
        let err = parse_header("X 1 250 1000\nX.dat 8\n").unwrap_err();
        assert!(matches!(err, IngestError::UnsupportedFormat(8)));
    }

    #[test]
    fn rejects_malformed() {
        for text in [
            "",
            "X 1 abc 1000\nX.dat 16\n",
            "X 1 250\nX.dat 16\n",
            "X 2 250 10\nX.dat 16\n",
            "X/3 2 250 10\n",
            "X 0 250 10\n",
            "X 1 250 10\nX.dat 16x4\n",
        ] {
            assert!(
                matches!(parse_header(text), Err(IngestError::MalformedHeader(_))),
                "accepted: {text:?}"
            );
        }
    }
}
