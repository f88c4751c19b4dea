//! Binary and per-symbol macro metrics from a handful of predictions.

use ecg_eho::metrics::{confusion_by_symbol, macro_metrics, metrics, MetricsError};
use ecg_eho::record::{BeatSymbol, BinaryLabel};

pub fn main() -> Result<(), MetricsError> {
    use BinaryLabel::{Abnormal, Normal};
    let mut pairs = vec![(BeatSymbol::Normal, Normal); 45];
    pairs.extend([(BeatSymbol::Normal, Abnormal); 5]);
    pairs.extend([(BeatSymbol::Pvc, Abnormal); 18]);
    pairs.extend([(BeatSymbol::Pvc, Normal); 2]);
    pairs.extend([(BeatSymbol::AtrialPremature, Normal); 3]);
    pairs.extend([(BeatSymbol::AtrialPremature, Abnormal); 2]);

    let m = confusion_by_symbol(&pairs)?;
    println!("tp {} fp {} tn {} fn {}", m.tp, m.fp, m.tn, m.fn_);
    for (label, row) in [("binary", metrics(&m)), ("macro", macro_metrics(&m).unwrap_or_default())] {
        println!(
            "{label:<7} acc {:6.2}  prec {:6.2}  se {:6.2}  f {:6.2}  sp {:6.2}",
            row.acc, row.prec, row.se, row.f, row.sp
        );
    }
    Ok(())
}
