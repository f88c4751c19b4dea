//! Per-patient stage tables, the baseline/optimized summary and an aligned
//! text rendering of both.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::MetricsRow;
use crate::features::N_FEATURES;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Baseline,
    Parameters,
    Features,
}

impl StageKind {
    pub fn name(self) -> &'static str {
        match self {
            StageKind::Baseline => "baseline",
            StageKind::Parameters => "parameters",
            StageKind::Features => "features",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [StageKind::Baseline, StageKind::Parameters, StageKind::Features]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// One evaluated configuration: a stage result or the baseline (stage 0).
#[derive(Debug, Clone, PartialEq)]
pub struct StageRow {
    pub stage: usize,
    pub kind: StageKind,
    /// Mean validation-fold accuracy of the stage's best position.
    pub fitness: f64,
    /// Best fitness over this and all earlier stages.
    pub cumulative_fitness: f64,
    pub fold_accuracies: Vec<f64>,
    /// Metrics over the pooled validation predictions.
    pub binary: MetricsRow,
    pub macro_avg: MetricsRow,
    pub penalty: f64,
    pub gamma: f64,
    pub mask: [bool; N_FEATURES],
    pub generations: usize,
}

impl StageRow {
    pub fn n_features(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn mask_string(&self) -> String {
        self.mask.iter().map(|m| if *m { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientReport {
    pub patient: String,
    pub baseline: StageRow,
    pub stages: Vec<StageRow>,
}

impl PatientReport {
    /// Index of the stage with the highest binary accuracy; the earliest
    /// wins a tie.
    pub fn best_stage(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.stages.iter().enumerate() {
            if best.is_none_or(|b| s.binary.acc > self.stages[b].binary.acc) {
                best = Some(i);
            }
        }
        best
    }

    pub fn optimized(&self) -> &StageRow {
        self.best_stage().map_or(&self.baseline, |i| &self.stages[i])
    }
}

const STAGE_HEADER: [&str; 22] = [
    "patient",
    "stage",
    "kind",
    "fitness",
    "cumulative_fitness",
    "fold_accuracies",
    "acc",
    "prec",
    "se",
    "f",
    "sp",
    "macro_acc",
    "macro_prec",
    "macro_se",
    "macro_f",
    "macro_sp",
    "penalty",
    "gamma",
    "n_features",
    "mask",
    "generations",
    "best",
];

fn row_record(patient: &str, r: &StageRow, best: bool) -> Vec<String> {
    let folds: Vec<String> = r.fold_accuracies.iter().map(|a| a.to_string()).collect();
    let mut rec = vec![
        patient.to_string(),
        r.stage.to_string(),
        r.kind.name().to_string(),
        r.fitness.to_string(),
        r.cumulative_fitness.to_string(),
        folds.join(";"),
    ];
    rec.extend(r.binary.as_array().iter().map(|v| v.to_string()));
    rec.extend(r.macro_avg.as_array().iter().map(|v| v.to_string()));
    rec.push(r.penalty.to_string());
    rec.push(r.gamma.to_string());
    rec.push(r.n_features().to_string());
    rec.push(r.mask_string());
    rec.push(r.generations.to_string());
    rec.push(if best { "1" } else { "0" }.to_string());
    rec
}

/// `<patient>_stages.csv`: one row per stage, the best-accuracy stage
/// flagged in the last column.
pub fn write_stages_csv<W: Write>(out: W, report: &PatientReport) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STAGE_HEADER)?;
    let best = report.best_stage();
    for (i, r) in report.stages.iter().enumerate() {
        w.write_record(row_record(&report.patient, r, best == Some(i)))?;
    }
    w.flush()?;
    Ok(())
}

/// `<patient>_baseline.csv`: the random-parameter, all-feature reference.
pub fn write_baseline_csv<W: Write>(out: W, report: &PatientReport) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STAGE_HEADER)?;
    w.write_record(row_record(&report.patient, &report.baseline, false))?;
    w.flush()?;
    Ok(())
}

fn parse_rows<R: Read>(input: R) -> Result<Vec<(String, StageRow)>, ReportError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = r.records();
    let err = |line: usize, message: String| ReportError::Format { line, message };
    let header = records.next().ok_or_else(|| err(1, "empty report".into()))??;
    if header.iter().collect::<Vec<_>>() != STAGE_HEADER {
        return Err(err(1, "unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != STAGE_HEADER.len() {
            return Err(err(line, format!("{} columns, want {}", rec.len(), STAGE_HEADER.len())));
        }
        let num = |k: usize| -> Result<f64, ReportError> {
            rec[k]
                .parse()
                .map_err(|_| err(line, format!("bad number in column {}", STAGE_HEADER[k])))
        };
        let int = |k: usize| -> Result<usize, ReportError> {
            rec[k]
                .parse()
                .map_err(|_| err(line, format!("bad integer in column {}", STAGE_HEADER[k])))
        };
        let kind = StageKind::parse(&rec[2]).ok_or_else(|| err(line, format!("unknown stage kind {:?}", &rec[2])))?;
        let fold_accuracies = if rec[5].is_empty() {
            Vec::new()
        } else {
            rec[5]
                .split(';')
                .map(|s| s.parse::<f64>().map_err(|_| err(line, "bad fold accuracy".into())))
                .collect::<Result<_, _>>()?
        };
        let mut binary = [0.0; 5];
        let mut macro_avg = [0.0; 5];
        for k in 0..5 {
            binary[k] = num(6 + k)?;
            macro_avg[k] = num(11 + k)?;
        }
        let bits = &rec[19];
        if bits.len() != N_FEATURES || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(err(line, "bad mask".into()));
        }
        let mut mask = [false; N_FEATURES];
        for (m, c) in mask.iter_mut().zip(bits.chars()) {
            *m = c == '1';
        }
        rows.push((
            rec[0].to_string(),
            StageRow {
                stage: int(1)?,
                kind,
                fitness: num(3)?,
                cumulative_fitness: num(4)?,
                fold_accuracies,
                binary: MetricsRow::from_array(binary),
                macro_avg: MetricsRow::from_array(macro_avg),
                penalty: num(16)?,
                gamma: num(17)?,
                mask,
                generations: int(20)?,
            },
        ));
    }
    Ok(rows)
}

/// Read a stages file back; returns the patient id and rows.
pub fn read_stages_csv<R: Read>(input: R) -> Result<(String, Vec<StageRow>), ReportError> {
    let rows = parse_rows(input)?;
    let patient = rows.first().map(|r| r.0.clone()).unwrap_or_default();
    if rows.iter().any(|r| r.0 != patient) {
        return Err(ReportError::Format {
            line: 0,
            message: "rows for more than one patient".into(),
        });
    }
    Ok((patient, rows.into_iter().map(|r| r.1).collect()))
}

pub fn read_baseline_csv<R: Read>(input: R) -> Result<(String, StageRow), ReportError> {
    let mut rows = parse_rows(input)?;
    if rows.len() != 1 {
        return Err(ReportError::Format {
            line: 0,
            message: format!("baseline file holds {} rows, want 1", rows.len()),
        });
    }
    Ok(rows.remove(0))
}

fn mean_rows<'a>(rows: impl Iterator<Item = &'a MetricsRow>) -> MetricsRow {
    let mut sum = [0.0; 5];
    let mut n = 0;
    for r in rows {
        for (s, v) in sum.iter_mut().zip(r.as_array()) {
            *s += v;
        }
        n += 1;
    }
    MetricsRow::from_array(sum.map(|s| if n == 0 { 0.0 } else { s / n as f64 }))
}

/// `summary.csv`: baseline and best-stage metrics per patient, then the
/// averages. The improvement column is optimized minus baseline accuracy.
pub fn write_summary_csv<W: Write>(out: W, reports: &[PatientReport]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["patient".to_string()];
    for prefix in ["baseline", "optimized"] {
        for m in ["acc", "prec", "se", "f", "sp"] {
            header.push(format!("{prefix}_{m}"));
        }
    }
    header.push("improvement".to_string());
    w.write_record(&header)?;
    let line = |name: &str, b: &MetricsRow, o: &MetricsRow| -> Vec<String> {
        let mut rec = vec![name.to_string()];
        rec.extend(b.as_array().iter().map(|v| format!("{v:.4}")));
        rec.extend(o.as_array().iter().map(|v| format!("{v:.4}")));
        rec.push(format!("{:.4}", o.acc - b.acc));
        rec
    };
    for r in reports {
        w.write_record(line(&r.patient, &r.baseline.binary, &r.optimized().binary))?;
    }
    let b = mean_rows(reports.iter().map(|r| &r.baseline.binary));
    let o = mean_rows(reports.iter().map(|r| &r.optimized().binary));
    w.write_record(line("average", &b, &o))?;
    w.flush()?;
    Ok(())
}

/// Human-readable tables: one per patient (best stage starred) and a
/// closing baseline-versus-optimized summary.
pub fn render_text_report(reports: &[PatientReport]) -> String {
    let mut s = String::new();
    let metrics = |m: &MetricsRow| {
        m.as_array()
            .iter()
            .map(|v| format!("{v:>8.2}"))
            .collect::<String>()
    };
    for r in reports {
        writeln!(s, "Patient {}", r.patient).unwrap();
        writeln!(
            s,
            "{:<6}{:<12}{:>9}{:>8}{:>8}{:>8}{:>8}{:>8}{:>10}{:>10}{:>10}",
            "Stage", "Kind", "Fitness", "Acc", "Prec", "Se", "F", "Sp", "Features", "C", "gamma"
        )
        .unwrap();
        let best = r.best_stage();
        let rows = std::iter::once((None, &r.baseline)).chain(r.stages.iter().enumerate().map(|(i, st)| (Some(i), st)));
        for (i, st) in rows {
            let label = if st.kind == StageKind::Baseline {
                "-".to_string()
            } else {
                st.stage.to_string()
            };
            writeln!(
                s,
                "{:<6}{:<12}{:>9.4}{}{:>10}{:>10.3}{:>10.4}{}",
                label,
                st.kind.name(),
                st.fitness,
                metrics(&st.binary),
                st.n_features(),
                st.penalty,
                st.gamma,
                if i.is_some() && i == best { "  *" } else { "" }
            )
            .unwrap();
        }
        let o = r.optimized();
        writeln!(s, "macro-averaged over beat symbols (best stage):{}", metrics(&o.macro_avg)).unwrap();
        writeln!(s).unwrap();
    }
    writeln!(s, "Summary").unwrap();
    writeln!(s, "{:<10}{:>8}{:>8}{:>8}{:>8}{:>8}", "", "Acc", "Prec", "Se", "F", "Sp").unwrap();
    let b = mean_rows(reports.iter().map(|r| &r.baseline.binary));
    let o = mean_rows(reports.iter().map(|r| &r.optimized().binary));
    writeln!(s, "{:<10}{}", "baseline", metrics(&b)).unwrap();
    writeln!(s, "{:<10}{}", "optimized", metrics(&o)).unwrap();
    writeln!(s, "{:<10}{:>8.2}", "improved", o.acc - b.acc).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stage(stage: usize, acc: f64) -> StageRow {
        let mut mask = [false; N_FEATURES];
        mask[stage % N_FEATURES] = true;
        mask[18] = true;
        StageRow {
            stage,
            kind: match stage {
                0 => StageKind::Baseline,
                s if s % 2 == 1 => StageKind::Parameters,
                _ => StageKind::Features,
            },
            fitness: acc / 100.0,
            cumulative_fitness: acc / 100.0,
            fold_accuracies: vec![acc / 100.0, 0.1 + 1.0 / 3.0, 0.7],
            binary: MetricsRow {
                acc,
                prec: 50.0,
                se: 25.0,
                f: 100.0 / 3.0,
                sp: 12.5,
            },
            macro_avg: MetricsRow::default(),
            penalty: 12.345678901,
            gamma: 0.001,
            mask,
            generations: 25,
        }
    }

    fn report(accs: [f64; 4]) -> PatientReport {
        PatientReport {
            patient: "221".into(),
            baseline: stage(0, 80.0),
            stages: (1..=4).map(|i| stage(i, accs[i - 1])).collect(),
        }
    }

    #[test]
    fn identical_stages_flag_the_first() {
        assert_eq!(report([90.0; 4]).best_stage(), Some(0));
        assert_eq!(report([90.0, 95.0, 95.0, 91.0]).best_stage(), Some(1));
    }

    #[test]
    fn stages_round_trip() {
        let r = report([90.0, 95.0, 97.5, 91.0]);
        let mut buf = Vec::new();
        write_stages_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(3).unwrap().ends_with(",1"));
        let (patient, rows) = read_stages_csv(&buf[..]).unwrap();
        assert_eq!(patient, "221");
        assert_eq!(rows, r.stages);

        let mut buf = Vec::new();
        write_baseline_csv(&mut buf, &r).unwrap();
        assert_eq!(read_baseline_csv(&buf[..]).unwrap().1, r.baseline);
    }

    #[test]
    fn summary_improvement() {
        let mut a = report([94.07, 90.0, 90.0, 90.0]);
        a.baseline.binary.acc = 80.31;
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[a]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("average,80.3100,"));
        assert!(last.ends_with(",13.7600"), "{last}");
    }

    #[test]
    fn text_report_marks_best() {
        let text = render_text_report(&[report([90.0, 99.71, 95.0, 91.0])]);
        let starred: Vec<&str> = text.lines().filter(|l| l.ends_with('*')).collect();
        assert_eq!(starred.len(), 1);
        assert!(starred[0].contains("99.71"));
        assert!(text.contains("baseline"));
    }

    #[test]
    fn malformed_stage_file() {
        assert!(read_stages_csv("".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_stages_csv(&mut buf, &report([1.0; 4])).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("parameters", "nonsense");
        assert!(matches!(read_stages_csv(text.as_bytes()), Err(ReportError::Format { line: 2, .. })));
    }
}
