//! ECG record ingestion: WFDB headers, format 212/16 signal files, MIT
//! annotation files, and a synthetic record generator for hermetic tests.

mod annotation;
mod header;
mod signal;
mod symbols;
mod synth;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use annotation::{encode_annotations, parse_annotations, AnnotationSet, BeatAnnotation};
pub use header::{parse_header, RecordHeader, SignalSpec};
pub use signal::{decode_signal_16, decode_signal_212, encode_signal_212, DecodedSignal};
pub use symbols::{map_to_binary, BeatSymbol, BinaryLabel};
pub use synth::{
    synthesize_record, BaselineWander, BeatMorphology, SynthSpec, SyntheticRecord, WaveShape,
};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("header line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported signal format {0}")]
    UnsupportedFormat(u16),
    #[error("unknown beat symbol {0:?}")]
    UnknownSymbol(char),
    #[error("invalid synthetic record parameters: {0}")]
    InvalidSpec(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RecordError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        RecordError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// A sampled multi-channel ECG record with its reference annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub sampling_rate: u32,
    pub resolution_bits: u32,
    /// Raw ADC samples, one vector per channel.
    pub channels: Vec<Vec<i32>>,
    /// ADC units per millivolt, per channel.
    pub gain: Vec<f64>,
    /// ADC value corresponding to 0 mV, per channel.
    pub baseline: Vec<i32>,
    pub annotations: Vec<BeatAnnotation>,
}

impl EcgRecord {
    pub fn new(
        record_id: impl Into<String>,
        sampling_rate: u32,
        resolution_bits: u32,
        channels: Vec<Vec<i32>>,
        gain: Vec<f64>,
        baseline: Vec<i32>,
        annotations: Vec<BeatAnnotation>,
    ) -> Result<Self, RecordError> {
        if sampling_rate == 0 {
            return Err(RecordError::InvalidRecord("sampling rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(RecordError::InvalidRecord("record has no channels".into()));
        }
        if gain.len() != channels.len() || baseline.len() != channels.len() {
            return Err(RecordError::InvalidRecord(
                "gain/baseline count does not match channel count".into(),
            ));
        }
        if gain.iter().any(|g| !(*g > 0.0)) {
            return Err(RecordError::InvalidRecord("gain must be positive".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(RecordError::InvalidRecord("channels differ in length".into()));
        }
        Ok(Self {
            record_id: record_id.into(),
            sampling_rate,
            resolution_bits,
            channels,
            gain,
            baseline,
            annotations,
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rate(&self) -> f64 {
        f64::from(self.sampling_rate)
    }

    /// Channel converted to millivolts.
    pub fn channel_mv(&self, channel: usize) -> Vec<f64> {
        let gain = self.gain[channel];
        let base = self.baseline[channel];
        self.channels[channel]
            .iter()
            .map(|&v| f64::from(v - base) / gain)
            .collect()
    }

    /// Read `<id>.hea`, its signal file and (if present) `<id>.atr` from `dir`.
    pub fn read_wfdb(dir: &Path, record_id: &str) -> Result<Self, RecordError> {
        let hea_path = dir.join(format!("{record_id}.hea"));
        let hea = read_file(&hea_path)?;
        let header = parse_header(&hea)?;
        let spec = &header.signals[0];
        let dat_path = dir.join(&spec.file_name);
        let dat = read_file(&dat_path)?;
        if header.signals.iter().any(|s| s.file_name != spec.file_name) {
            return Err(RecordError::InvalidRecord(
                "signals split across several files are not supported".into(),
            ));
        }
        let n = header.signals.len();
        let mut decoded = match spec.format {
            212 => decode_signal_212(&dat, n),
            16 => decode_signal_16(&dat, n),
            other => return Err(RecordError::UnsupportedFormat(other)),
        };
        if let Some(expected) = header.n_samples {
            for ch in decoded.channels.iter_mut() {
                ch.truncate(expected);
            }
        }
        let atr_path = dir.join(format!("{record_id}.atr"));
        let annotations = if atr_path.exists() {
            parse_annotations(&read_file(&atr_path)?).annotations
        } else {
            Vec::new()
        };
        EcgRecord::new(
            header.record_id.clone(),
            header.sampling_rate,
            spec.adc_resolution,
            decoded.channels,
            header.signals.iter().map(|s| s.gain).collect(),
            header.signals.iter().map(|s| s.baseline).collect(),
            annotations,
        )
    }

    /// Write `<id>.hea`, `<id>.dat` (format 212) and `<id>.atr` into `dir`.
    /// Samples must fit in 12 signed bits.
    pub fn write_wfdb(&self, dir: &Path) -> Result<(), RecordError> {
        if self.channels.iter().flatten().any(|v| !(-2048..=2047).contains(v)) {
            return Err(RecordError::InvalidRecord("samples exceed the 12-bit range of format 212".into()));
        }
        let id = &self.record_id;
        let mut hea = format!("{id} {} {} {}\n", self.channels.len(), self.sampling_rate, self.len());
        for (c, ch) in self.channels.iter().enumerate() {
            hea.push_str(&format!(
                "{id}.dat 212 {}({})/mV {} {} {} 0 0 ch{c}\n",
                self.gain[c],
                self.baseline[c],
                self.resolution_bits,
                self.baseline[c],
                ch.first().copied().unwrap_or(0)
            ));
        }
        write_file(&dir.join(format!("{id}.hea")), hea.as_bytes())?;
        write_file(&dir.join(format!("{id}.dat")), &encode_signal_212(&self.channels))?;
        write_file(&dir.join(format!("{id}.atr")), &encode_annotations(&self.annotations))
    }

    /// Line-oriented text dump: a `#` header, then `index,ch0,ch1,...` per sample.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# record={} rate={} channels={} samples={}",
            self.record_id,
            self.sampling_rate,
            self.channels.len(),
            self.len()
        )?;
        for (c, (g, b)) in self.gain.iter().zip(&self.baseline).enumerate() {
            writeln!(out, "# channel={c} gain={g} baseline={b}")?;
        }
        for i in 0..self.len() {
            write!(out, "{i}")?;
            for ch in &self.channels {
                write!(out, ",{}", ch[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RecordError> {
    std::fs::write(path, bytes).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, RecordError> {
    std::fs::read(path).map_err(|source| RecordError::Io {
        path: path.to_path_buf(),
        source,
    })
}
