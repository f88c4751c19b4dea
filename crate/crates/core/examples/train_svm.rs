//! Train an RBF SVM on a subset of features, save it as text, reload it and
//! score both copies.

use std::error::Error;

use ecg_eho::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use ecg_eho::metrics::{confusion_by_symbol, metrics};
use ecg_eho::record::{synthesize_record, SynthSpec};
use ecg_eho::svm::{Classifier, KernelParams, TrainConfig};
use ecg_eho::workflow::process_record;

fn features(seed: u64) -> Result<Vec<FeatureVector>, Box<dyn Error>> {
    let mut spec = SynthSpec::new(80.0, 120.0);
    spec.ectopic_fraction = 0.2;
    spec.noise_mv = 0.04;
    spec.seed = seed;
    Ok(process_record(&synthesize_record(&spec)?.record, 0)?.features)
}

pub fn main() -> Result<(), Box<dyn Error>> {
    let train_set = features(1)?;
    let test_set = features(2)?;

    let mut mask = [false; N_FEATURES];
    for name in ["QRS", "RR", "PP", "Heartbeat"] {
        mask[FEATURE_NAMES.iter().position(|n| *n == name).unwrap()] = true;
    }
    let refs: Vec<&FeatureVector> = train_set.iter().collect();
    let clf = Classifier::fit(&refs, &mask, &TrainConfig::new(10.0), KernelParams::new(0.5)?)?;
    println!(
        "{} support vectors, training accuracy {:.4}",
        clf.model.support_vectors.len(),
        clf.training_accuracy
    );

    let text = clf.to_text();
    let reloaded = Classifier::from_text(&text)?;
    let pairs: Vec<_> = test_set.iter().map(|v| (v.symbol, reloaded.decide(v).1)).collect();
    let agree = test_set.iter().filter(|v| clf.decide(v) == reloaded.decide(v)).count();
    let row = metrics(&confusion_by_symbol(&pairs)?);
    println!("held-out record: acc {:.2}%  se {:.2}%  sp {:.2}%", row.acc, row.se, row.sp);
    println!("reloaded model agrees on {agree}/{} beats", test_set.len());
    Ok(())
}
