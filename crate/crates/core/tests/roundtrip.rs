//! File formats read back exactly what was written.

use ecg_eho::features::{read_feature_csv, write_feature_csv, FeatureVector, N_FEATURES};
use ecg_eho::metrics::{read_baseline_csv, read_stages_csv, write_baseline_csv, write_stages_csv};
use ecg_eho::pipeline::{run_patient, PipelineConfig};
use ecg_eho::record::{synthesize_record, BeatSymbol, SynthSpec};
use ecg_eho::svm::{Classifier, KernelParams, TrainConfig};
use ecg_eho::workflow::process_record;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_features(seed: u64) -> Vec<FeatureVector> {
    let mut spec = SynthSpec::new(75.0, 90.0);
    spec.ectopic_fraction = 0.25;
    spec.noise_mv = 0.03;
    spec.seed = seed;
    let syn = synthesize_record(&spec).unwrap();
    process_record(&syn.record, 0).unwrap().features
}

#[test]
fn saved_model_scores_like_the_original() {
    let data = synthetic_features(1);
    let refs: Vec<&FeatureVector> = data.iter().collect();
    let mut mask = [false; N_FEATURES];
    for k in [0, 3, 9, 14, 15, 18] {
        mask[k] = true;
    }
    let clf = Classifier::fit(&refs, &mask, &TrainConfig::new(20.0), KernelParams::new(0.7).unwrap()).unwrap();
    let loaded = Classifier::from_text(&clf.to_text()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let v = FeatureVector {
            values: std::array::from_fn(|_| rng.random_range(-1.0..2.0)),
            present: [true; N_FEATURES],
            label: ecg_eho::record::BinaryLabel::Normal,
            symbol: BeatSymbol::Normal,
        };
        assert_eq!(loaded.decide(&v), clf.decide(&v));
    }
}

#[test]
fn feature_csv_round_trip() {
    let data = synthetic_features(2);
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &data).unwrap();
    assert_eq!(read_feature_csv(buf.as_slice()).unwrap(), data);
}

#[test]
fn stage_reports_round_trip() {
    let run = run_patient("rt", synthetic_features(3), &PipelineConfig::new(5, 2)).unwrap();
    let report = run.report();
    let mut stages = Vec::new();
    write_stages_csv(&mut stages, &report).unwrap();
    let (patient, rows) = read_stages_csv(stages.as_slice()).unwrap();
    assert_eq!(patient, "rt");
    assert_eq!(rows, report.stages);
    let mut base = Vec::new();
    write_baseline_csv(&mut base, &report).unwrap();
    assert_eq!(read_baseline_csv(base.as_slice()).unwrap().1, report.baseline);
}

#[test]
fn wfdb_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SynthSpec::new(66.0, 10.0 + 1.0 / 360.0);
    spec.record_id = "777".into();
    spec.ectopic_fraction = 0.3;
    let record = synthesize_record(&spec).unwrap().record;
    assert_eq!(record.len() % 2, 1);
    record.write_wfdb(dir.path()).unwrap();
    let back = ecg_eho::record::EcgRecord::read_wfdb(dir.path(), "777").unwrap();
    assert_eq!(back, record);
}
