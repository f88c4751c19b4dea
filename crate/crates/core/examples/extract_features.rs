//! From a record to labelled feature rows: detection, delineation, the
//! letter stream and the nineteen interval features.

use std::error::Error;

use ecg_eho::features::{write_feature_csv, FEATURE_NAMES};
use ecg_eho::record::{synthesize_record, SynthSpec};
use ecg_eho::workflow::process_record;

pub fn main() -> Result<(), Box<dyn Error>> {
    let mut spec = SynthSpec::new(72.0, 30.0);
    spec.ectopic_fraction = 0.2;
    spec.noise_mv = 0.02;
    spec.seed = 4;
    let syn = synthesize_record(&spec)?;
    let rf = process_record(&syn.record, 0)?;

    let m = rf.matching;
    println!(
        "{} detections, {} matched to beats, {} excluded, {} unmatched",
        m.detected, m.matched, m.excluded, m.unmatched
    );
    println!(
        "repair: {} brackets imputed, {} beats dropped",
        rf.repair.imputed_brackets, rf.repair.dropped_beats
    );
    let text = rf.stream.text();
    println!("letter stream: {}...", &text[..text.len().min(60)]);

    for v in rf.features.iter().take(3) {
        println!("beat {} ({:?}):", v.symbol.as_char(), v.label);
        for (name, (x, present)) in FEATURE_NAMES.iter().zip(v.values.iter().zip(v.present)) {
            let mark = if present { "" } else { " (imputed)" };
            println!("  {name:<10} {x:>9.4}{mark}");
        }
    }

    let mut csv = Vec::new();
    write_feature_csv(&mut csv, &rf.features)?;
    println!("{} feature rows, {} bytes of CSV", rf.features.len(), csv.len());
    Ok(())
}
