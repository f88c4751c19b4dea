//! The staged search on one synthetic patient: a random baseline, then
//! alternating parameter and feature stages.

use std::error::Error;

use ecg_eho::metrics::render_text_report;
use ecg_eho::pipeline::{run_patient, PipelineConfig};
use ecg_eho::record::synthesize_record;
use ecg_eho::workflow::{process_record, synthetic_patient};

pub fn main() -> Result<(), Box<dyn Error>> {
    let spec = synthetic_patient("demo", 0, 90.0);
    let data = process_record(&synthesize_record(&spec)?.record, 0)?.features;
    let run = run_patient("demo", data, &PipelineConfig::new(0, 5))?;

    for s in &run.stages {
        println!(
            "stage {} ({:?}): warm start {:.4} -> {:.4} after {} evaluations",
            s.stage_no,
            s.spec.kind,
            s.warm_start_fitness,
            s.best.fitness(),
            s.evaluations
        );
    }
    print!("{}", render_text_report(&[run.report()]));
    Ok(())
}
