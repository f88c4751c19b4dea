//! Stratified folds and the fold-averaged accuracy used as fitness.

use std::error::Error;

use ecg_eho::features::N_FEATURES;
use ecg_eho::pipeline::{Decoded, FitnessContext, FoldPlan};
use ecg_eho::record::{synthesize_record, SynthSpec};
use ecg_eho::svm::TrainConfig;
use ecg_eho::workflow::process_record;

pub fn main() -> Result<(), Box<dyn Error>> {
    let mut spec = SynthSpec::new(70.0, 120.0);
    spec.ectopic_fraction = 0.15;
    spec.noise_mv = 0.03;
    let data = process_record(&synthesize_record(&spec)?.record, 0)?.features;
    let labels: Vec<_> = data.iter().map(|v| v.label).collect();

    let folds = FoldPlan::stratified(&labels, 3, 7);
    println!("fold assignment: {folds}");
    for k in 0..folds.n_folds {
        println!("fold {k}: {} validation beats", folds.validation(k).len());
    }

    let ctx = FitnessContext::new(data, folds, false, TrainConfig::new(1.0))?;
    for (penalty, gamma) in [(1.0, 0.1), (10.0, 1.0), (100.0, 10.0), (1000.0, 1000.0)] {
        let e = ctx.evaluate(&Decoded {
            penalty,
            gamma,
            mask: [true; N_FEATURES],
        });
        let folds: Vec<String> = e.fold_accuracies.iter().map(|a| format!("{a:.3}")).collect();
        println!("C {penalty:>6}  gamma {gamma:>6}: folds [{}] fitness {:.4}", folds.join(", "), e.fitness);
    }
    Ok(())
}
