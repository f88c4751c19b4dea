//! Command-line front end: `ingest`, `optimize`, `evaluate` and `report`.
//!
//! Exit codes are 0 on success, 1 for usage errors, 2 for missing or
//! malformed data and 3 for internal invariant violations.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::eho::write_trace_csv;
use crate::features::{read_feature_csv, write_feature_csv, FeatureVector};
use crate::metrics::{
    confusion_by_symbol, macro_metrics, metrics, read_baseline_csv, read_stages_csv, render_text_report,
    write_baseline_csv, write_stages_csv, write_summary_csv, MetricsRow, PatientReport,
};
use crate::mpta::FilteredSignal;
use crate::pipeline::{run_patient, PatientRun, PipelineConfig, PipelineError};
use crate::record::{synthesize_record, EcgRecord};
use crate::svm::Classifier;
use crate::workflow::{process_record, synthetic_patient, RecordFeatures};

/// The MIT-BIH records studied by default.
pub const DEFAULT_PATIENTS: [&str; 10] = ["202", "203", "205", "207", "214", "215", "217", "219", "221", "223"];

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::Internal(_) => 3,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Data(format!("{}: {e}", path.display()))
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InsufficientData(_) | PipelineError::InvalidData(_) => AppError::Data(e.to_string()),
            other => AppError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ecg-eho", version, about = "ECG heartbeat classification with EHO-tuned SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect, delineate and extract one feature CSV per patient.
    Ingest,
    /// Run the staged search per patient and write reports and models.
    Optimize,
    /// Score a saved model on a feature file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Rebuild the summary and text report from stage CSVs.
    Report,
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// Input directory (records for ingest, CSVs for the other commands).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Comma-separated record ids.
    #[arg(long, global = true)]
    patients: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    stage_generations: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Generate records instead of reading them.
    #[arg(long, global = true)]
    synthetic: bool,
    /// Length of each synthetic record in seconds.
    #[arg(long, global = true)]
    synthetic_duration: Option<f64>,
    /// Score folds by balanced accuracy.
    #[arg(long, global = true)]
    balanced_fitness: bool,
    /// Write every detection stage and the letter stream during ingest.
    #[arg(long, global = true)]
    dump_stages: bool,
    /// `key = value` file whose settings override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub patients: Vec<String>,
    pub seed: u64,
    pub stage_generations: usize,
    pub jobs: usize,
    pub synthetic: bool,
    pub synthetic_duration_s: f64,
    pub balanced_fitness: bool,
    pub dump_stages: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("."),
            out_dir: PathBuf::from("."),
            patients: DEFAULT_PATIENTS.iter().map(|p| p.to_string()).collect(),
            seed: 0,
            stage_generations: 25,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            synthetic: false,
            synthetic_duration_s: 120.0,
            balanced_fitness: false,
            dump_stages: false,
        }
    }
}

fn parse_patients(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, AppError> {
    value
        .parse()
        .map_err(|_| AppError::Usage(format!("invalid value {value:?} for {key}")))
}

impl RunConfig {
    fn from_flags(flags: &Flags) -> Self {
        let d = RunConfig::default();
        Self {
            data_dir: flags.data_dir.clone().unwrap_or(d.data_dir),
            out_dir: flags.out_dir.clone().unwrap_or(d.out_dir),
            patients: flags.patients.as_deref().map_or(d.patients, parse_patients),
            seed: flags.seed.unwrap_or(d.seed),
            stage_generations: flags.stage_generations.unwrap_or(d.stage_generations),
            jobs: flags.jobs.unwrap_or(d.jobs),
            synthetic: flags.synthetic,
            synthetic_duration_s: flags.synthetic_duration.unwrap_or(d.synthetic_duration_s),
            balanced_fitness: flags.balanced_fitness,
            dump_stages: flags.dump_stages,
        }
    }

    /// Apply `key = value` lines. Keys match the long flag names, with
    /// `-` or `_`; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<(), AppError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AppError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "data-dir" => self.data_dir = PathBuf::from(value),
                "out-dir" => self.out_dir = PathBuf::from(value),
                "patients" => self.patients = parse_patients(value),
                "seed" => self.seed = parse_value(&key, value)?,
                "stage-generations" => self.stage_generations = parse_value(&key, value)?,
                "jobs" => self.jobs = parse_value(&key, value)?,
                "synthetic" => self.synthetic = parse_value(&key, value)?,
                "synthetic-duration" => self.synthetic_duration_s = parse_value(&key, value)?,
                "balanced-fitness" => self.balanced_fitness = parse_value(&key, value)?,
                "dump-stages" => self.dump_stages = parse_value(&key, value)?,
                other => return Err(AppError::Usage(format!("config line {}: unknown key {other:?}", n + 1))),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.patients.is_empty() {
            return Err(AppError::Usage("patient list is empty".into()));
        }
        if self.jobs == 0 {
            return Err(AppError::Usage("--jobs must be at least 1".into()));
        }
        if !(self.synthetic_duration_s > 0.0) {
            return Err(AppError::Usage("--synthetic-duration must be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let mut p = PipelineConfig::new(self.seed, self.stage_generations);
        p.balanced_fitness = self.balanced_fitness;
        p
    }

    fn in_path(&self, name: &str) -> PathBuf {
        self.data_dir.join(name)
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, AppError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| AppError::Internal(e.to_string()))
    }
}

/// Parse arguments and run, writing normal output to `out`. Help and
/// version requests succeed.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), AppError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{e}").map_err(|e| AppError::Internal(e.to_string()))
                }
                _ => Err(AppError::Usage(e.render().to_string())),
            };
        }
    };
    let mut config = RunConfig::from_flags(&cli.flags);
    if let Some(path) = &cli.flags.config {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        config.apply_config_text(&text)?;
    }
    config.validate()?;
    match cli.command {
        Command::Ingest => cmd_ingest(&config, out),
        Command::Optimize => cmd_optimize(&config, out),
        Command::Evaluate { model, features } => cmd_evaluate(&model, &features, out),
        Command::Report => cmd_report(&config, out),
    }
}

/// [`run`] with panics mapped to exit code 3 and errors printed to `err`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(args, out)));
    let result = result.unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(AppError::Internal(msg))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), AppError> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

fn ensure_out_dir(config: &RunConfig) -> Result<(), AppError> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_error(&config.out_dir, e))
}

fn load_record(config: &RunConfig, patient: &str) -> Result<EcgRecord, AppError> {
    if config.synthetic {
        let spec = synthetic_patient(patient, config.seed, config.synthetic_duration_s);
        synthesize_record(&spec)
            .map(|s| s.record)
            .map_err(|e| AppError::Internal(e.to_string()))
    } else {
        EcgRecord::read_wfdb(&config.data_dir, patient).map_err(|e| AppError::Data(format!("record {patient}: {e}")))
    }
}

fn record_features(config: &RunConfig, patient: &str) -> Result<(EcgRecord, RecordFeatures), AppError> {
    let record = load_record(config, patient)?;
    let rf = process_record(&record, 0).map_err(|e| AppError::Data(format!("record {patient}: {e}")))?;
    Ok((record, rf))
}

fn dump_stages(config: &RunConfig, patient: &str, record: &EcgRecord, rf: &RecordFeatures) -> Result<(), AppError> {
    let raw = FilteredSignal::raw(record.channel_mv(0), record.rate());
    for stage in std::iter::once(&raw).chain(rf.chain.stages()) {
        let path = config.out_path(&format!("{patient}_{}.csv", stage.stage.name()));
        write_file(&path, |w| stage.write_csv(w).map_err(|e| e.to_string()))?;
    }
    write_file(&config.out_path(&format!("{patient}_r_peaks.csv")), |w| {
        writeln!(w, "beat,r_peak").map_err(|e| e.to_string())?;
        for (i, r) in rf.chain.r_peaks.iter().enumerate() {
            writeln!(w, "{i},{r}").map_err(|e| e.to_string())?;
        }
        Ok(())
    })?;
    write_file(&config.out_path(&format!("{patient}_fiducials.csv")), |w| {
        writeln!(w, "beat,symbol,ps,p,pe,q,r,s,ts,t,te").map_err(|e| e.to_string())?;
        for (f, s) in rf.fiducials.iter().zip(&rf.symbols) {
            let cols: Vec<String> = f.points().iter().map(|p| p.map_or(String::new(), |v| v.to_string())).collect();
            writeln!(w, "{},{},{}", f.beat_index, s.as_char(), cols.join(",")).map_err(|e| e.to_string())?;
        }
        Ok(())
    })?;
    write_file(&config.out_path(&format!("{patient}_letters.txt")), |w| {
        writeln!(w, "{}", rf.stream.text()).map_err(|e| e.to_string())
    })
}

fn cmd_ingest(config: &RunConfig, out: &mut dyn Write) -> Result<(), AppError> {
    ensure_out_dir(config)?;
    let results: Vec<_> = config
        .pool()?
        .install(|| config.patients.par_iter().map(|p| record_features(config, p)).collect());
    for (patient, result) in config.patients.iter().zip(results) {
        let (record, rf) = result?;
        let path = config.out_path(&format!("{patient}_features.csv"));
        write_file(&path, |w| write_feature_csv(w, &rf.features).map_err(|e| e.to_string()))?;
        if config.dump_stages {
            dump_stages(config, patient, &record, &rf)?;
        }
        let m = rf.matching;
        writeln!(
            out,
            "{patient}: {} annotated beats, {} detections, {} matched, {} excluded, {} unmatched, {} feature rows",
            m.annotated_beats,
            m.detected,
            m.matched,
            m.excluded,
            m.unmatched,
            rf.features.len()
        )
        .map_err(|e| AppError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn read_features(path: &Path) -> Result<Vec<FeatureVector>, AppError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_feature_csv(std::io::BufReader::new(file)).map_err(|e| io_error(path, e))
}

fn patient_features(config: &RunConfig, patient: &str) -> Result<Vec<FeatureVector>, AppError> {
    if config.synthetic {
        Ok(record_features(config, patient)?.1.features)
    } else {
        read_features(&config.in_path(&format!("{patient}_features.csv")))
    }
}

fn write_reports(config: &RunConfig, reports: &[PatientReport], out: &mut dyn Write) -> Result<(), AppError> {
    write_file(&config.out_path("summary.csv"), |w| {
        write_summary_csv(w, reports).map_err(|e| e.to_string())
    })?;
    let text = render_text_report(reports);
    write_file(&config.out_path("report.txt"), |w| {
        w.write_all(text.as_bytes()).map_err(|e| e.to_string())
    })?;
    out.write_all(text.as_bytes()).map_err(|e| AppError::Internal(e.to_string()))
}

fn write_patient_run(config: &RunConfig, run: &PatientRun) -> Result<PatientReport, AppError> {
    let p = &run.patient;
    let report = run.report();
    write_file(&config.out_path(&format!("{p}_stages.csv")), |w| {
        write_stages_csv(w, &report).map_err(|e| e.to_string())
    })?;
    write_file(&config.out_path(&format!("{p}_baseline.csv")), |w| {
        write_baseline_csv(w, &report).map_err(|e| e.to_string())
    })?;
    for s in &run.stages {
        write_file(&config.out_path(&format!("{p}_stage{}_convergence.csv", s.stage_no)), |w| {
            write_trace_csv(w, &s.trace).map_err(|e| e.to_string())
        })?;
    }
    write_file(&config.out_path(&format!("{p}_model.txt")), |w| {
        w.write_all(run.classifier.to_text().as_bytes()).map_err(|e| e.to_string())
    })?;
    Ok(report)
}

fn cmd_optimize(config: &RunConfig, out: &mut dyn Write) -> Result<(), AppError> {
    ensure_out_dir(config)?;
    let pipeline = config.pipeline();
    let runs: Vec<Result<PatientRun, AppError>> = config.pool()?.install(|| {
        config
            .patients
            .par_iter()
            .map(|p| {
                let data = patient_features(config, p)?;
                log::info!("patient {p}: {} beats", data.len());
                run_patient(p, data, &pipeline).map_err(AppError::from)
            })
            .collect()
    });
    let mut reports = Vec::with_capacity(runs.len());
    for run in runs {
        reports.push(write_patient_run(config, &run?)?);
    }
    write_reports(config, &reports, out)
}

fn format_row(name: &str, r: &MetricsRow) -> String {
    format!(
        "{name:<8} acc {:.4}  prec {:.4}  se {:.4}  f {:.4}  sp {:.4}",
        r.acc, r.prec, r.se, r.f, r.sp
    )
}

/// Score `classifier` on `features`: binary and macro-averaged rows.
pub fn evaluate_classifier(classifier: &Classifier, features: &[FeatureVector]) -> Option<(MetricsRow, MetricsRow)> {
    let pairs: Vec<_> = features.iter().map(|v| (v.symbol, classifier.decide(v).1)).collect();
    let m = confusion_by_symbol(&pairs).ok()?;
    Some((metrics(&m), macro_metrics(&m)?))
}

fn cmd_evaluate(model: &Path, features: &Path, out: &mut dyn Write) -> Result<(), AppError> {
    let text = std::fs::read_to_string(model).map_err(|e| io_error(model, e))?;
    let classifier = Classifier::from_text(&text).map_err(|e| io_error(model, e))?;
    let data = read_features(features)?;
    let (binary, macro_avg) =
        evaluate_classifier(&classifier, &data).ok_or_else(|| io_error(features, "no beats to score"))?;
    writeln!(out, "{}", format_row("binary", &binary))
        .and_then(|_| writeln!(out, "{}", format_row("macro", &macro_avg)))
        .map_err(|e| AppError::Internal(e.to_string()))
}

fn cmd_report(config: &RunConfig, out: &mut dyn Write) -> Result<(), AppError> {
    ensure_out_dir(config)?;
    let mut reports = Vec::with_capacity(config.patients.len());
    for p in &config.patients {
        let stages_path = config.in_path(&format!("{p}_stages.csv"));
        let baseline_path = config.in_path(&format!("{p}_baseline.csv"));
        let open = |path: &Path| File::open(path).map_err(|e| io_error(path, e));
        let (patient, stages) = read_stages_csv(open(&stages_path)?).map_err(|e| io_error(&stages_path, e))?;
        let (_, baseline) = read_baseline_csv(open(&baseline_path)?).map_err(|e| io_error(&baseline_path, e))?;
        reports.push(PatientReport {
            patient,
            baseline,
            stages,
        });
    }
    write_reports(config, &reports, out)
}
