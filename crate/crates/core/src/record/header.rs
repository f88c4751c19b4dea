use super::RecordError;

const DEFAULT_GAIN: f64 = 200.0;
const DEFAULT_RATE: f64 = 250.0;

/// Per-channel entry of a WFDB header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: u16,
    pub gain: f64,
    pub baseline: i32,
    pub units: Option<String>,
    pub adc_resolution: u32,
    pub adc_zero: i32,
    pub initial_value: Option<i32>,
    pub checksum: Option<i32>,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_id: String,
    pub sampling_rate: u32,
    pub n_samples: Option<usize>,
    pub signals: Vec<SignalSpec>,
}

/// Parse a single-segment WFDB `.hea` header.
pub fn parse_header(bytes: &[u8]) -> Result<RecordHeader, RecordError> {
    let text = std::str::from_utf8(bytes).map_err(|_| RecordError::parse(0, "header is not UTF-8"))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, record_line) = lines
        .next()
        .ok_or_else(|| RecordError::parse(0, "empty header"))?;
    let mut fields = record_line.split_whitespace();
    let name = fields.next().ok_or_else(|| RecordError::parse(line_no, "missing record name"))?;
    if name.contains('/') {
        return Err(RecordError::parse(line_no, "multi-segment records are not supported"));
    }
    let n_signals: usize = fields
        .next()
        .ok_or_else(|| RecordError::parse(line_no, "missing signal count"))?
        .parse()
        .map_err(|_| RecordError::parse(line_no, "signal count is not an integer"))?;
    if n_signals == 0 {
        return Err(RecordError::parse(line_no, "record declares zero signals"));
    }
    let rate = match fields.next() {
        Some(f) => {
            let freq = f.split(['/', '(']).next().unwrap_or(f);
            freq.parse::<f64>()
                .map_err(|_| RecordError::parse(line_no, format!("bad sampling frequency {f:?}")))?
        }
        None => DEFAULT_RATE,
    };
    if !(rate > 0.0) || rate.fract() != 0.0 || rate > f64::from(u32::MAX) {
        return Err(RecordError::parse(
            line_no,
            format!("sampling frequency {rate} is not a positive integer"),
        ));
    }
    let n_samples = match fields.next() {
        Some(f) => Some(
            f.parse::<usize>()
                .map_err(|_| RecordError::parse(line_no, format!("bad sample count {f:?}")))?,
        ),
        None => None,
    };

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| RecordError::parse(line_no, "fewer signal lines than declared"))?;
        signals.push(parse_signal_line(line_no, line)?);
    }

    Ok(RecordHeader {
        record_id: name.to_string(),
        sampling_rate: rate as u32,
        n_samples,
        signals,
    })
}

fn parse_signal_line(line_no: usize, line: &str) -> Result<SignalSpec, RecordError> {
    let mut fields = line.split_whitespace();
    let file_name = fields
        .next()
        .ok_or_else(|| RecordError::parse(line_no, "missing file name"))?
        .to_string();
    let fmt_field = fields
        .next()
        .ok_or_else(|| RecordError::parse(line_no, "missing format"))?;
    let fmt_digits: String = fmt_field.chars().take_while(|c| c.is_ascii_digit()).collect();
    if fmt_digits.len() != fmt_field.len() {
        return Err(RecordError::parse(
            line_no,
            "sample-frame multipliers, skews and byte offsets are not supported",
        ));
    }
    let format: u16 = fmt_digits
        .parse()
        .map_err(|_| RecordError::parse(line_no, format!("bad format {fmt_field:?}")))?;
    if format != 212 && format != 16 {
        return Err(RecordError::UnsupportedFormat(format));
    }

    let mut gain = DEFAULT_GAIN;
    let mut explicit_baseline = None;
    let mut units = None;
    if let Some(g) = fields.next() {
        let (g, unit) = match g.split_once('/') {
            Some((a, b)) => (a, Some(b.to_string())),
            None => (g, None),
        };
        units = unit;
        let (g, base) = match g.split_once('(') {
            Some((a, b)) => {
                let b = b
                    .strip_suffix(')')
                    .ok_or_else(|| RecordError::parse(line_no, "unterminated baseline"))?;
                let base = b
                    .parse::<i32>()
                    .map_err(|_| RecordError::parse(line_no, format!("bad baseline {b:?}")))?;
                (a, Some(base))
            }
            None => (g, None),
        };
        explicit_baseline = base;
        let parsed = g
            .parse::<f64>()
            .map_err(|_| RecordError::parse(line_no, format!("bad gain {g:?}")))?;
        if parsed < 0.0 || !parsed.is_finite() {
            return Err(RecordError::parse(line_no, format!("bad gain {g:?}")));
        }
        if parsed > 0.0 {
            gain = parsed;
        }
    }
    let mut int_field = |what: &str| -> Result<Option<i32>, RecordError> {
        match fields.next() {
            Some(f) => f
                .parse::<i32>()
                .map(Some)
                .map_err(|_| RecordError::parse(line_no, format!("bad {what} {f:?}"))),
            None => Ok(None),
        }
    };
    let adc_resolution = int_field("ADC resolution")?.unwrap_or(12);
    let adc_zero = int_field("ADC zero")?.unwrap_or(0);
    let initial_value = int_field("initial value")?;
    let checksum = int_field("checksum")?;
    let _block_size = int_field("block size")?;
    let description: Vec<&str> = fields.collect();
    if adc_resolution < 0 {
        return Err(RecordError::parse(line_no, "negative ADC resolution"));
    }

    Ok(SignalSpec {
        file_name,
        format,
        gain,
        baseline: explicit_baseline.unwrap_or(adc_zero),
        units,
        adc_resolution: adc_resolution as u32,
        adc_zero,
        initial_value,
        checksum,
        description: (!description.is_empty()).then(|| description.join(" ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MITDB_STYLE: &str = "221 2 360 650000\n\
221.dat 212 200 11 1024 -48 8520 0 MLII\n\
221.dat 212 200 11 1024 12 -6123 0 V1\n\
# 83 M 1629 1108 x1\n\
# Digoxin\n";

    #[test]
    fn two_channel_format_212() {
        let h = parse_header(MITDB_STYLE.as_bytes()).unwrap();
        assert_eq!(h.record_id, "221");
        assert_eq!(h.sampling_rate, 360);
        assert_eq!(h.n_samples, Some(650000));
        assert_eq!(h.signals.len(), 2);
        let s = &h.signals[0];
        assert_eq!(s.format, 212);
        assert_eq!(s.gain, 200.0);
        assert_eq!(s.adc_resolution, 11);
        assert_eq!(s.baseline, 1024);
        assert_eq!(s.initial_value, Some(-48));
        assert_eq!(s.description.as_deref(), Some("MLII"));
        assert_eq!(h.signals[1].description.as_deref(), Some("V1"));
    }

    #[test]
    fn explicit_baseline_and_units() {
        let h = parse_header(b"r 1 360\nr.dat 16 100(-5)/mV 16 7\n").unwrap();
        let s = &h.signals[0];
        assert_eq!(s.format, 16);
        assert_eq!(s.gain, 100.0);
        assert_eq!(s.baseline, -5);
        assert_eq!(s.adc_zero, 7);
        assert_eq!(s.units.as_deref(), Some("mV"));
        assert_eq!(h.n_samples, None);
    }

    #[test]
    fn zero_gain_means_default() {
        let h = parse_header(b"r 1 360\nr.dat 212 0 11 1024\n").unwrap();
        assert_eq!(h.signals[0].gain, 200.0);
    }

    #[test]
    fn zero_channels_rejected() {
        let err = parse_header(b"r 0 360\n").unwrap_err();
        assert!(matches!(err, RecordError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn unsupported_format_rejected() {
        let err = parse_header(b"r 1 360\nr.dat 80 200\n").unwrap_err();
        assert!(matches!(err, RecordError::UnsupportedFormat(80)));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_header(b"# comment\nr 2 360\nr.dat 212 200\nr.dat 212 abc\n").unwrap_err();
        assert!(matches!(err, RecordError::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn missing_signal_lines() {
        assert!(parse_header(b"r 2 360\nr.dat 212\n").is_err());
    }
}
