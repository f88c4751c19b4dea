//! Run the detection chain on a noisy synthetic record and score the R
//! peaks against the generator's ground truth.

use std::error::Error;

use ecg_eho::mpta::{match_peaks, run_chain};
use ecg_eho::record::{synthesize_record, BaselineWander, SynthSpec};

pub fn main() -> Result<(), Box<dyn Error>> {
    for bpm in [45.0, 75.0, 120.0, 150.0] {
        let mut spec = SynthSpec::new(bpm, 60.0);
        spec.noise_mv = 0.08;
        spec.baseline_wander = Some(BaselineWander {
            frequency_hz: 0.25,
            amplitude_mv: 0.3,
        });
        spec.ectopic_fraction = 0.1;
        spec.seed = bpm as u64;
        let syn = synthesize_record(&spec)?;
        let rate = syn.record.rate();
        let out = run_chain(&syn.signal_mv, rate)?;
        let truth: Vec<usize> = syn.record.annotations.iter().map(|a| a.sample_index).collect();
        let m = match_peaks(&out.r_peaks, &truth, (0.05 * rate) as usize);
        println!(
            "{bpm:>5} bpm: {} beats, {} detected, sensitivity {:.4}, precision {:.4}",
            truth.len(),
            out.r_peaks.len(),
            m.sensitivity(),
            m.precision()
        );
    }

    let syn = synthesize_record(&SynthSpec::new(60.0, 10.0))?;
    let out = run_chain(&syn.signal_mv, syn.record.rate())?;
    for stage in out.stages() {
        println!("{:<15} group delay {:>3} samples", stage.stage.name(), stage.group_delay);
    }
    Ok(())
}
