//! Per-beat feature computation from delineated fiducial points.

use super::{index, FeatureError, FeatureVector, N_FEATURES};
use crate::mpta::FiducialSet;
use crate::record::BeatSymbol;

fn span(from: Option<usize>, to: Option<usize>, rate: f64) -> Option<f64> {
    match (from, to) {
        (Some(a), Some(b)) if b >= a => Some((b - a) as f64 / rate),
        _ => None,
    }
}

/// Compute the nineteen features of every beat.
///
/// Location features are offsets in seconds from PS, or from Q when PS is
/// missing. The last beat takes its RR and PP from the preceding beat.
/// Anything that cannot be measured is replaced by the record mean of that
/// feature and its `present` bit is cleared.
pub fn extract_features(
    fiducials: &[FiducialSet],
    rate: f64,
    symbols: &[BeatSymbol],
) -> Result<Vec<FeatureVector>, FeatureError> {
    let n = fiducials.len();
    if symbols.len() != n {
        return Err(FeatureError::LabelCount {
            fiducials: n,
            labels: symbols.len(),
        });
    }
    if n < 2 {
        return Err(FeatureError::InsufficientBeats(n));
    }
    let mut labels = Vec::with_capacity(n);
    for s in symbols {
        labels.push(s.label().ok_or(FeatureError::NonBeatSymbol(*s))?);
    }

    let mut raw: Vec<[Option<f64>; N_FEATURES]> = Vec::with_capacity(n);
    let mut rr_sum = 0.0;
    let mut rr_sq = 0.0;
    let mut rr_count = 0usize;
    for (i, f) in fiducials.iter().enumerate() {
        let mut v = [None; N_FEATURES];
        if let Some(origin) = f.ps.or(f.q) {
            for (k, p) in f.points().into_iter().enumerate() {
                v[k] = span(Some(origin), p, rate);
            }
        }
        v[index::QRS] = span(f.q, f.s, rate);
        v[index::P_R_SEG] = span(f.pe, f.q, rate);
        v[index::P_R_INT] = span(f.ps, f.q, rate);
        v[index::S_T_SEG] = span(f.s, f.ts, rate);
        v[index::QT] = span(f.q, f.te, rate);

        let (a, b) = if i + 1 < n {
            (f, &fiducials[i + 1])
        } else {
            (&fiducials[i - 1], f)
        };
        let rr = span(Some(a.r), Some(b.r), rate).filter(|x| *x > 0.0);
        let pp = span(a.p, b.p, rate);
        v[index::RR] = rr;
        v[index::PP] = pp;
        if let (Some(rr), Some(pp)) = (rr, pp) {
            v[index::RR_PP_SIM] = Some((rr - pp).abs());
        }
        if let Some(rr) = rr {
            rr_sum += rr;
            rr_sq += rr * rr;
            rr_count += 1;
            v[index::HEARTBEAT] = Some(60.0 / rr);
        }
        if rr_count > 0 {
            let mean = rr_sum / rr_count as f64;
            v[index::RR_VAR] = Some((rr_sq / rr_count as f64 - mean * mean).max(0.0));
        }
        raw.push(v);
    }

    let mut means = [0.0; N_FEATURES];
    for (k, m) in means.iter_mut().enumerate() {
        let present: Vec<f64> = raw.iter().filter_map(|v| v[k]).collect();
        if !present.is_empty() {
            *m = present.iter().sum::<f64>() / present.len() as f64;
        }
    }

    Ok(raw
        .into_iter()
        .zip(labels)
        .zip(symbols)
        .map(|((v, label), symbol)| {
            let mut values = [0.0; N_FEATURES];
            let mut present = [false; N_FEATURES];
            for k in 0..N_FEATURES {
                values[k] = v[k].unwrap_or(means[k]);
                present[k] = v[k].is_some();
            }
            FeatureVector {
                values,
                present,
                label,
                symbol: *symbol,
            }
        })
        .collect())
}
