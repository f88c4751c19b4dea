//! Elephant herding on the sphere function. Fitness is maximized, so the
//! objective is the negated sum of squares.

use std::convert::Infallible;
use std::error::Error;

use ecg_eho::eho::{run, EhoConfig};

pub fn main() -> Result<(), Box<dyn Error>> {
    let config = EhoConfig::new(vec![(-5.0, 5.0); 10], 100, 42);
    let sphere = |x: &[f64]| -> Result<f64, Infallible> { Ok(-x.iter().map(|v| v * v).sum::<f64>()) };
    let out = run(&config, &sphere, &[]).map_err(|e| format!("{e:?}"))?;

    println!("initial best {:.4}", out.initial_best);
    for g in [0, 9, 24, 49, 99] {
        println!("generation {:>3}: {:.3e}", g + 1, out.trace[g]);
    }
    println!("{} evaluations", out.evaluations);
    println!("best position {:?}", out.best_position.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>());
    Ok(())
}
