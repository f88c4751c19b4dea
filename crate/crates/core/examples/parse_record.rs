//! Read a WFDB record (header, format 212 signal, annotations).
//!
//! `cargo run --example parse_record -- <dir> <record>` reads an existing
//! record such as MIT-BIH 221. Without arguments a synthetic record is
//! written to a temporary directory and read back.

use std::collections::BTreeMap;
use std::error::Error;
use std::path::PathBuf;

use ecg_eho::record::{synthesize_record, EcgRecord, SynthSpec};

pub fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scratch = tempfile::tempdir()?;
    let (dir, id) = match args.as_slice() {
        [dir, id] => (PathBuf::from(dir), id.clone()),
        _ => {
            let mut spec = SynthSpec::new(70.0, 60.0);
            spec.record_id = "demo".into();
            spec.ectopic_fraction = 0.1;
            spec.noise_mv = 0.02;
            synthesize_record(&spec)?.record.write_wfdb(scratch.path())?;
            (scratch.path().to_path_buf(), "demo".to_string())
        }
    };

    let record = EcgRecord::read_wfdb(&dir, &id)?;
    println!(
        "record {}: {} channels, {} samples at {} Hz ({:.1} s)",
        record.record_id,
        record.channels.len(),
        record.len(),
        record.sampling_rate,
        record.len() as f64 / record.rate()
    );
    let mv = record.channel_mv(0);
    let (lo, hi) = mv.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
    println!("channel 0 spans {lo:.3} .. {hi:.3} mV");

    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for a in &record.annotations {
        *counts.entry(a.symbol.as_char()).or_default() += 1;
    }
    for (symbol, n) in counts {
        println!("  {symbol}: {n}");
    }
    Ok(())
}
