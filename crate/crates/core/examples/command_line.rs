//! Drive the `ingest`, `optimize` and `evaluate` commands in-process, as the
//! `ecg-eho` binary does.

use std::error::Error;

pub fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let d = dir.path().to_str().ok_or("non-UTF-8 temp path")?;
    let mut out = std::io::stdout();
    let common = ["--synthetic", "--patients", "demo", "--data-dir", d, "--out-dir", d];

    ecg_eho::app::run(["ecg-eho", "ingest"].iter().chain(&common), &mut out)?;
    let gens = ["--stage-generations", "3", "--seed", "1"];
    ecg_eho::app::run(["ecg-eho", "optimize"].iter().chain(&common).chain(&gens), &mut out)?;

    let model = dir.path().join("demo_model.txt");
    let features = dir.path().join("demo_features.csv");
    ecg_eho::app::run(
        [
            "ecg-eho",
            "evaluate",
            "--model",
            model.to_str().ok_or("path")?,
            "--features",
            features.to_str().ok_or("path")?,
        ],
        &mut out,
    )?;

    let mut files: Vec<_> = std::fs::read_dir(dir.path())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("wrote {}", files.join(" "));
    Ok(())
}
