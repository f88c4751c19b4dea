//! Every example runs to completion.

#[path = "../examples/parse_record.rs"]
mod parse_record;

#[path = "../examples/detect_qrs.rs"]
mod detect_qrs;

#[path = "../examples/extract_features.rs"]
mod extract_features;

#[path = "../examples/train_svm.rs"]
mod train_svm;

#[path = "../examples/eho_sphere.rs"]
mod eho_sphere;

#[path = "../examples/cross_validation.rs"]
mod cross_validation;

#[path = "../examples/staged_optimization.rs"]
mod staged_optimization;

#[path = "../examples/metrics_report.rs"]
mod metrics_report;

#[path = "../examples/command_line.rs"]
mod command_line;

#[test]
fn parse_record_runs() {
    parse_record::main().expect("parse_record");
}

#[test]
fn detect_qrs_runs() {
    detect_qrs::main().expect("detect_qrs");
}

#[test]
fn extract_features_runs() {
    extract_features::main().expect("extract_features");
}

#[test]
fn train_svm_runs() {
    train_svm::main().expect("train_svm");
}

#[test]
fn eho_sphere_runs() {
    eho_sphere::main().expect("eho_sphere");
}

#[test]
fn cross_validation_runs() {
    cross_validation::main().expect("cross_validation");
}

#[test]
fn staged_optimization_runs() {
    staged_optimization::main().expect("staged_optimization");
}

#[test]
fn metrics_report_runs() {
    metrics_report::main().expect("metrics_report");
}

#[test]
fn command_line_runs() {
    command_line::main().expect("command_line");
}
