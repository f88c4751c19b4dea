//! End-to-end runs of the `ecg-eho` binary.

use std::path::Path;
use std::process::{Command, Output};

use ecg_eho::features::{read_feature_csv, FEATURE_NAMES};
use ecg_eho::metrics::read_stages_csv;

fn ecg_eho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecg-eho"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ingest_demo(dir: &Path, patients: &str) {
    let d = dir.to_str().unwrap();
    let o = ecg_eho(&["ingest", "--synthetic", "--patients", patients, "--out-dir", d]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn optimize(dir: &Path, patients: &str, generations: &str) -> Output {
    let d = dir.to_str().unwrap();
    ecg_eho(&[
        "optimize",
        "--patients",
        patients,
        "--data-dir",
        d,
        "--out-dir",
        d,
        "--stage-generations",
        generations,
        "--seed",
        "3",
    ])
}

#[test]
fn synthetic_ingest_writes_feature_header() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path(), "demo");
    let text = std::fs::read_to_string(dir.path().join("demo_features.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..19], &FEATURE_NAMES[..]);
    let rows = read_feature_csv(text.as_bytes()).unwrap();
    assert!(rows.len() > 100);
}

#[test]
fn dump_stages_writes_each_signal() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = ecg_eho(&["ingest", "--synthetic", "--patients", "x", "--out-dir", d, "--dump-stages"]);
    assert!(o.status.success());
    for stage in ["raw", "bandpassed", "differentiated", "squared", "integrated", "r_peaks", "fiducials"] {
        let path = dir.path().join(format!("x_{stage}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().count() > 10, "{stage}");
    }
    assert!(std::fs::read_to_string(dir.path().join("x_letters.txt")).unwrap().contains("(N)"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ecg_eho(&["ingest", "--synthetic", "--patients", ""]).status.code(), Some(1));
    assert_eq!(ecg_eho(&["optimize", "--seed", "minus-one"]).status.code(), Some(1));
    assert_eq!(ecg_eho(&["evaluate", "--model", "m.txt"]).status.code(), Some(1));
    assert_eq!(ecg_eho(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_record_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = ecg_eho(&["ingest", "--patients", "221", "--data-dir", d, "--out-dir", d]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("221.hea"), "{}", stderr(&o));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, format!("# demo\npatients = fromconfig\nout_dir = {}\n", dir.path().display())).unwrap();
    let o = ecg_eho(&["ingest", "--synthetic", "--patients", "fromflag", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("fromconfig_features.csv").exists());
    assert!(!dir.path().join("fromflag_features.csv").exists());
}

#[test]
fn zero_generations_keep_the_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path(), "p");
    let o = optimize(dir.path(), "p", "0");
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_stages_csv(std::fs::File::open(dir.path().join("p_stages.csv")).unwrap()).unwrap();
    let base = std::fs::read_to_string(dir.path().join("p_baseline.csv")).unwrap();
    let (_, baseline) = ecg_eho::metrics::read_baseline_csv(base.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r.fitness, baseline.fitness);
        assert_eq!(r.binary, baseline.binary);
    }
}

#[test]
fn separable_synthetic_patient_reaches_full_accuracy() {
    // normal and ventricular beats differ in QRS width and shape
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path(), "sep");
    let o = optimize(dir.path(), "sep", "10");
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = read_stages_csv(std::fs::File::open(dir.path().join("sep_stages.csv")).unwrap()).unwrap();
    let best = rows.iter().map(|r| r.binary.acc).fold(0.0, f64::max);
    assert_eq!(best, 100.0);
    for name in ["summary.csv", "report.txt", "sep_model.txt", "sep_baseline.csv", "sep_stage4_convergence.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    assert!(stdout(&o).contains("Summary"));
}

#[test]
fn evaluate_on_training_file() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path(), "ev");
    assert!(optimize(dir.path(), "ev", "2").status.success());
    let model_path = dir.path().join("ev_model.txt");
    let features_path = dir.path().join("ev_features.csv");
    let o = ecg_eho(&["evaluate", "--model", model_path.to_str().unwrap(), "--features", features_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let acc: f64 = out
        .lines()
        .find(|l| l.starts_with("binary"))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap();
    let model = std::fs::read_to_string(&model_path).unwrap();
    let logged: f64 = model
        .lines()
        .find_map(|l| l.strip_prefix("training_accuracy "))
        .unwrap()
        .parse()
        .unwrap();
    // printed with four decimals
    assert!(acc / 100.0 >= logged - 1e-9 - 5e-7, "{acc} vs {logged}");
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path(), "bad");
    let features = dir.path().join("bad_features.csv");
    let model = dir.path().join("bad_model.txt");
    assert!(optimize(dir.path(), "bad", "0").status.success());

    let text = std::fs::read_to_string(&features).unwrap();
    let truncated: String = text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect();
    std::fs::write(&features, truncated).unwrap();
    let o = ecg_eho(&["evaluate", "--model", model.to_str().unwrap(), "--features", features.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(optimize(dir.path(), "bad", "0").status.code(), Some(2));

    std::fs::write(&features, text).unwrap();
    let m = std::fs::read_to_string(&model).unwrap().replace("mask ", "mask 1");
    std::fs::write(&model, m).unwrap();
    let o = ecg_eho(&["evaluate", "--model", model.to_str().unwrap(), "--features", features.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn report_rebuilds_identical_text() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path(), "a,b");
    assert!(optimize(dir.path(), "a,b", "1").status.success());
    let again = dir.path().join("again");
    let o = ecg_eho(&[
        "report",
        "--patients",
        "a,b",
        "--data-dir",
        dir.path().to_str().unwrap(),
        "--out-dir",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["report.txt", "summary.csv"] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

/// Runs only when MIT-BIH record 221 is available.
#[test]
fn record_221_rows_track_annotations() {
    let Some(dir) = std::env::var_os("ECG_EHO_MITDB") else {
        return;
    };
    let dir = Path::new(&dir);
    if !dir.join("221.hea").exists() {
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let o = ecg_eho(&[
        "ingest",
        "--patients",
        "221",
        "--data-dir",
        dir.to_str().unwrap(),
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let record = ecg_eho::record::EcgRecord::read_wfdb(dir, "221").unwrap();
    let beats = record.annotations.iter().filter(|a| a.symbol.label().is_some()).count() as f64;
    let rows = read_feature_csv(std::fs::File::open(out.path().join("221_features.csv")).unwrap()).unwrap();
    assert!((rows.len() as f64 - beats).abs() <= 0.02 * beats, "{} rows for {beats} beats", rows.len());
}
