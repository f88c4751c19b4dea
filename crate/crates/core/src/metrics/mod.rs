//! Confusion matrices, the five classification metrics and report files.

mod report;

pub use report::{
    read_baseline_csv, read_stages_csv, render_text_report, write_baseline_csv, write_stages_csv,
    write_summary_csv, PatientReport, ReportError, StageKind, StageRow,
};

use std::collections::BTreeMap;

use crate::record::{BeatSymbol, BinaryLabel};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("no predictions to score")]
    EmptyPredictions,
}

/// Predictions made for beats of one annotation symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SymbolCounts {
    pub predicted_normal: usize,
    pub predicted_abnormal: usize,
}

/// Binary counts with Normal as the positive class, plus a per-symbol
/// breakdown for the macro view.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub per_symbol: BTreeMap<BeatSymbol, SymbolCounts>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, truth: BinaryLabel, predicted: BinaryLabel) {
        use BinaryLabel::{Abnormal, Normal};
        match (truth, predicted) {
            (Normal, Normal) => self.tp += 1,
            (Normal, Abnormal) => self.fn_ += 1,
            (Abnormal, Abnormal) => self.tn += 1,
            (Abnormal, Normal) => self.fp += 1,
        }
    }

    /// Record a prediction for a beat whose truth comes from its symbol.
    pub fn add_symbol(&mut self, symbol: BeatSymbol, predicted: BinaryLabel) {
        let truth = symbol.label().expect("only beat symbols are classified");
        self.add(truth, predicted);
        let c = self.per_symbol.entry(symbol).or_default();
        match predicted {
            BinaryLabel::Normal => c.predicted_normal += 1,
            BinaryLabel::Abnormal => c.predicted_abnormal += 1,
        }
    }
}

/// Tally `(truth, predicted)` pairs.
pub fn confusion(pairs: &[(BinaryLabel, BinaryLabel)]) -> Result<ConfusionMatrix, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyPredictions);
    }
    let mut m = ConfusionMatrix::default();
    for (t, p) in pairs {
        m.add(*t, *p);
    }
    Ok(m)
}

/// Tally `(symbol, predicted)` pairs, keeping the per-symbol breakdown.
pub fn confusion_by_symbol(pairs: &[(BeatSymbol, BinaryLabel)]) -> Result<ConfusionMatrix, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyPredictions);
    }
    let mut m = ConfusionMatrix::default();
    for (s, p) in pairs {
        m.add_symbol(*s, *p);
    }
    Ok(m)
}

/// Accuracy, precision, sensitivity, F-measure and specificity, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsRow {
    pub acc: f64,
    pub prec: f64,
    pub se: f64,
    pub f: f64,
    pub sp: f64,
}

impl MetricsRow {
    pub fn as_array(&self) -> [f64; 5] {
        [self.acc, self.prec, self.se, self.f, self.sp]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            acc: a[0],
            prec: a[1],
            se: a[2],
            f: a[3],
            sp: a[4],
        }
    }

    fn mean(rows: &[MetricsRow]) -> MetricsRow {
        let mut sum = [0.0; 5];
        for r in rows {
            for (s, v) in sum.iter_mut().zip(r.as_array()) {
                *s += v;
            }
        }
        MetricsRow::from_array(sum.map(|s| s / rows.len() as f64))
    }
}

/// `num / den`, or 0 when the denominator is 0.
fn ratio(num: usize, den: usize, what: &str) -> f64 {
    if den == 0 {
        log::debug!("{what} has a zero denominator; reporting 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f_measure(prec: f64, se: f64) -> f64 {
    if prec + se == 0.0 {
        0.0
    } else {
        2.0 * prec * se / (prec + se)
    }
}

fn row(tp: usize, fp: usize, tn: usize, fn_: usize) -> MetricsRow {
    let prec = ratio(tp, tp + fp, "precision");
    let se = ratio(tp, tp + fn_, "sensitivity");
    MetricsRow {
        acc: 100.0 * ratio(tp + tn, tp + fp + tn + fn_, "accuracy"),
        prec: 100.0 * prec,
        se: 100.0 * se,
        f: 100.0 * f_measure(prec, se),
        sp: 100.0 * ratio(tn, tn + fp, "specificity"),
    }
}

pub fn metrics(m: &ConfusionMatrix) -> MetricsRow {
    row(m.tp, m.fp, m.tn, m.fn_)
}

/// One-vs-rest metrics per beat symbol, averaged over the symbols present.
///
/// For symbol `s`, the positives are the beats annotated `s` and a beat is
/// predicted positive when it receives the binary label of `s`. Returns
/// `None` without a per-symbol breakdown.
pub fn macro_metrics(m: &ConfusionMatrix) -> Option<MetricsRow> {
    if m.per_symbol.is_empty() {
        return None;
    }
    let total: usize = m.per_symbol.values().map(|c| c.predicted_normal + c.predicted_abnormal).sum();
    let predicted_as = |label: BinaryLabel, c: &SymbolCounts| match label {
        BinaryLabel::Normal => c.predicted_normal,
        BinaryLabel::Abnormal => c.predicted_abnormal,
    };
    let rows: Vec<MetricsRow> = m
        .per_symbol
        .iter()
        .map(|(s, c)| {
            let label = s.label().expect("beat symbol");
            let n = c.predicted_normal + c.predicted_abnormal;
            let tp = predicted_as(label, c);
            let fn_ = n - tp;
            let fp: usize = m
                .per_symbol
                .iter()
                .filter(|(o, _)| *o != s)
                .map(|(_, oc)| predicted_as(label, oc))
                .sum();
            let tn = total - n - fp;
            row(tp, fp, tn, fn_)
        })
        .collect();
    Some(MetricsRow::mean(&rows))
}
