//! Adaptive dual-threshold R-peak detection on the integrated signal.

use super::{FilteredSignal, MptaError};

/// Weight of the newest peak in the running signal/noise level estimates.
const LEVEL_WEIGHT: f64 = 0.25;
/// Search back once no beat was found for this multiple of the mean RR.
const SEARCH_BACK_RR: f64 = 1.66;

struct Levels {
    signal: f64,
    noise: f64,
}

impl Levels {
    fn threshold(&self) -> f64 {
        self.noise + 0.25 * (self.signal - self.noise)
    }

    fn signal_peak(&mut self, v: f64) {
        self.signal = LEVEL_WEIGHT * v + (1.0 - LEVEL_WEIGHT) * self.signal;
    }

    fn noise_peak(&mut self, v: f64) {
        self.noise = LEVEL_WEIGHT * v + (1.0 - LEVEL_WEIGHT) * self.noise;
    }
}

/// Local maxima of `x` that dominate a ±`half` neighbourhood.
fn candidate_peaks(x: &[f64], half: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..x.len() {
        let v = x[i];
        if v <= 0.0 {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(x.len());
        // strictly greater than everything before it, at least everything after
        if x[lo..i].iter().all(|&u| u < v) && x[i + 1..hi].iter().all(|&u| u <= v) {
            out.push(i);
        }
    }
    out
}

fn max_slope(bp: &[f64], lo: usize, hi: usize) -> f64 {
    let lo = lo.max(1);
    let hi = hi.min(bp.len());
    (lo..hi).map(|k| (bp[k] - bp[k - 1]).abs()).fold(0.0, f64::max)
}

/// Detect R peaks. Returned indices are in original-signal time: the
/// bandpass group delay is removed after locating the largest bandpassed
/// excursion inside each detected integration window.
pub fn detect_r_peaks(
    integrated: &FilteredSignal,
    bandpassed: &FilteredSignal,
) -> Result<Vec<usize>, MptaError> {
    let n = integrated.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if bandpassed.len() != n || bandpassed.sampling_rate != integrated.sampling_rate {
        return Err(MptaError::Mismatch);
    }
    let fs = integrated.sampling_rate;
    let mwi = &integrated.samples;
    let bp = &bandpassed.samples;
    let refractory = (0.200 * fs).round() as usize;
    let t_wave_window = (0.360 * fs).round() as usize;
    let window = (0.150 * fs).round() as usize;

    let learn = ((2.0 * fs) as usize).min(n);
    let learn_max = mwi[..learn].iter().cloned().fold(0.0, f64::max);
    if learn_max <= 0.0 && mwi.iter().all(|v| *v <= 0.0) {
        return Ok(Vec::new());
    }
    let learn_mean = mwi[..learn].iter().sum::<f64>() / learn as f64;
    let mut levels = Levels {
        signal: learn_max / 3.0,
        noise: learn_mean / 2.0,
    };

    let slope_at = |c: usize| max_slope(bp, c.saturating_sub(window + 2), c + 1);

    let mut accepted: Vec<usize> = Vec::new();
    let mut last_slope = 0.0;
    let mut rr: Vec<usize> = Vec::new();
    let mut pending: Vec<usize> = Vec::new();

    let accept = |c: usize, accepted: &mut Vec<usize>, rr: &mut Vec<usize>, pending: &mut Vec<usize>| {
        if let Some(&last) = accepted.last() {
            rr.push(c - last);
            if rr.len() > 8 {
                rr.remove(0);
            }
        }
        accepted.push(c);
        pending.retain(|&p| p > c + refractory);
    };

    let candidates = candidate_peaks(mwi, refractory / 2);
    for c in candidates.iter().copied().chain(std::iter::once(usize::MAX)) {
        // search back over peaks skipped since the last beat
        if let (Some(&last), false) = (accepted.last(), rr.is_empty()) {
            let mean_rr = rr.iter().sum::<usize>() as f64 / rr.len() as f64;
            let now = c.min(n);
            if (now - last) as f64 > SEARCH_BACK_RR * mean_rr {
                let low_threshold = 0.5 * levels.threshold();
                let best = pending
                    .iter()
                    .copied()
                    .filter(|&p| p > last + refractory && p < now && mwi[p] > low_threshold)
                    .max_by(|a, b| mwi[*a].total_cmp(&mwi[*b]));
                if let Some(p) = best {
                    levels.signal_peak(mwi[p]);
                    last_slope = slope_at(p);
                    accept(p, &mut accepted, &mut rr, &mut pending);
                }
            }
        }
        if c == usize::MAX {
            break;
        }
        let v = mwi[c];
        if let Some(&last) = accepted.last() {
            if c < last + refractory {
                continue;
            }
        }
        if v > levels.threshold() {
            let slope = slope_at(c);
            let t_wave = matches!(accepted.last(), Some(&last) if c - last < t_wave_window)
                && slope < 0.5 * last_slope;
            if t_wave {
                levels.noise_peak(v);
                pending.push(c);
            } else {
                levels.signal_peak(v);
                last_slope = slope;
                accept(c, &mut accepted, &mut rr, &mut pending);
            }
        } else {
            levels.noise_peak(v);
            pending.push(c);
        }
    }

    // Map each integration peak onto the largest bandpassed excursion that
    // fed it, then remove the bandpass delay.
    let delay = bandpassed.group_delay;
    let mut peaks: Vec<(usize, f64)> = Vec::with_capacity(accepted.len());
    for c in accepted {
        let lo = c.saturating_sub(window + 2);
        let hi = (c + 1).min(n);
        let (k, amp) = (lo..hi)
            .map(|k| (k, bp[k].abs()))
            .fold((lo, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let r = k.saturating_sub(delay);
        match peaks.last_mut() {
            Some(prev) if r < prev.0 + refractory => {
                if amp > prev.1 {
                    *prev = (r, amp);
                }
            }
            _ => peaks.push((r, amp)),
        }
    }
    Ok(peaks.into_iter().map(|(r, _)| r).collect())
}
