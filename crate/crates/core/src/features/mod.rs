//! The nineteen per-beat features, letter-stream repair, scaling and the
//! feature-matrix CSV interchange format.

mod extract;
mod letters;
mod scaling;

use std::io::{Read, Write};

pub use extract::extract_features;
pub use letters::{
    fiducials_to_letters, repair_stream, stream_to_fiducials, AnnotationStream, Letter,
    RepairStats,
};
pub use scaling::{fit_scaling, ScalingParams};

use crate::record::{BeatSymbol, BinaryLabel};

pub const N_FEATURES: usize = 19;

/// Column names, in feature order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "PS", "P", "PE", "Q", "R", "S", "TS", "T", "TE", "QRS", "P_RSeg", "P_RInt", "S_TSeg", "QT",
    "RR", "PP", "RR_PPSim", "RRVar", "Heartbeat",
];

pub mod index {
    pub const QRS: usize = 9;
    pub const P_R_SEG: usize = 10;
    pub const P_R_INT: usize = 11;
    pub const S_T_SEG: usize = 12;
    pub const QT: usize = 13;
    pub const RR: usize = 14;
    pub const PP: usize = 15;
    pub const RR_PP_SIM: usize = 16;
    pub const RR_VAR: usize = 17;
    pub const HEARTBEAT: usize = 18;
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("need at least two beats, got {0}")]
    InsufficientBeats(usize),
    #[error("{fiducials} fiducial sets but {labels} labels")]
    LabelCount { fiducials: usize, labels: usize },
    #[error("symbol {0} does not mark a heartbeat")]
    NonBeatSymbol(BeatSymbol),
    #[error("cannot fit scaling on an empty training set")]
    EmptyTrainingSet,
    #[error("feature file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One beat's features. Values that could not be measured are imputed and
/// have their `present` bit cleared.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
    pub present: [bool; N_FEATURES],
    pub label: BinaryLabel,
    pub symbol: BeatSymbol,
}

impl FeatureVector {
    /// Values of the features selected by `mask`, in order.
    pub fn project(&self, mask: &[bool]) -> Vec<f64> {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .collect()
    }
}

const EXTRA_COLUMNS: [&str; 3] = ["label", "symbol", "present"];

/// Write the feature matrix: one row per beat, the 19 feature columns then
/// `label` (N/A), `symbol` (source beat symbol) and `present` (a 19-digit
/// bit string).
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureVector]) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEATURE_NAMES.iter().chain(EXTRA_COLUMNS.iter()))?;
    for row in rows {
        let mut rec: Vec<String> = row.values.iter().map(|v| v.to_string()).collect();
        rec.push(row.label.as_char().to_string());
        rec.push(row.symbol.as_char().to_string());
        rec.push(row.present.iter().map(|p| if *p { '1' } else { '0' }).collect());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = r.records();
    let fmt = |line: usize, message: String| FeatureError::Format { line, message };
    let header = records.next().ok_or_else(|| fmt(1, "empty feature file".into()))??;
    let expected: Vec<&str> = FEATURE_NAMES.iter().chain(EXTRA_COLUMNS.iter()).copied().collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(fmt(1, format!("unexpected header, want {}", expected.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != expected.len() {
            return Err(fmt(line, format!("{} columns, want {}", rec.len(), expected.len())));
        }
        let mut values = [0.0f64; N_FEATURES];
        for (k, v) in values.iter_mut().enumerate() {
            *v = rec[k]
                .parse()
                .map_err(|_| fmt(line, format!("bad number {:?} in column {}", &rec[k], FEATURE_NAMES[k])))?;
            if !v.is_finite() {
                return Err(fmt(line, format!("non-finite value in column {}", FEATURE_NAMES[k])));
            }
        }
        let single = |s: &str| {
            let mut c = s.chars();
            match (c.next(), c.next()) {
                (Some(ch), None) => Some(ch),
                _ => None,
            }
        };
        let label = single(&rec[N_FEATURES])
            .and_then(BinaryLabel::from_char)
            .ok_or_else(|| fmt(line, format!("bad label {:?}", &rec[N_FEATURES])))?;
        let symbol = single(&rec[N_FEATURES + 1])
            .and_then(|c| BeatSymbol::from_char(c).ok())
            .ok_or_else(|| fmt(line, format!("bad symbol {:?}", &rec[N_FEATURES + 1])))?;
        if symbol.label() != Some(label) {
            return Err(fmt(line, format!("label {label:?} inconsistent with symbol {symbol}")));
        }
        let bits = &rec[N_FEATURES + 2];
        if bits.len() != N_FEATURES || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(fmt(line, format!("bad presence mask {bits:?}")));
        }
        let mut present = [false; N_FEATURES];
        for (p, c) in present.iter_mut().zip(bits.chars()) {
            *p = c == '1';
        }
        rows.push(FeatureVector {
            values,
            present,
            label,
            symbol,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: f64, symbol: BeatSymbol) -> FeatureVector {
        let mut values = [0.0f64; N_FEATURES];
        for (k, v) in values.iter_mut().enumerate() {
            *v = seed * (k as f64 + 1.0) / 7.0;
        }
        let mut present = [true; N_FEATURES];
        present[3] = false;
        FeatureVector {
            values,
            present,
            label: symbol.label().unwrap(),
            symbol,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(1.0, BeatSymbol::Normal), row(-0.3, BeatSymbol::Pvc)];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("PS,P,PE,Q,R,S,TS,T,TE,QRS,P_RSeg,P_RInt,S_TSeg,QT,RR,PP,RR_PPSim,RRVar,Heartbeat,label"));
        assert_eq!(read_feature_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn wrong_column_count() {
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[row(1.0, BeatSymbol::Normal)]).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("1,2,3\n");
        let err = read_feature_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, FeatureError::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn wrong_header() {
        assert!(read_feature_csv("a,b\n".as_bytes()).is_err());
        assert!(read_feature_csv("".as_bytes()).is_err());
    }
}
