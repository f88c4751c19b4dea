//! Fiducial point delineation around detected R peaks.
//!
//! Works on a low-frequency version of the ECG: a 25 ms centred moving
//! average with the median baseline (200 ms then 600 ms medians) removed.

use super::FiducialSet;

/// Onset/offset level as a fraction of the wave's peak-to-baseline height.
const EDGE_FRACTION: f64 = 0.10;
const R_REFINE_S: f64 = 0.040;
const Q_WINDOW_S: f64 = 0.080;
const S_WINDOW_S: f64 = 0.120;
const P_LOOKBACK_S: f64 = 0.280;
const T_START_S: f64 = 0.080;
const T_END_S: f64 = 0.400;
/// Isoelectric guard next to the Q and S troughs.
const TROUGH_GUARD_S: f64 = 0.030;

fn secs(rate: f64, s: f64) -> usize {
    (s * rate).round() as usize
}

fn centred_mean(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Centred running median evaluated every `stride` samples and linearly
/// interpolated in between.
fn strided_median(x: &[f64], width: usize, stride: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let half = width / 2;
    let mut knots = Vec::new();
    let mut buf = Vec::with_capacity(width + 1);
    let mut i: usize = 0;
    loop {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        buf.clear();
        buf.extend_from_slice(&x[lo..hi]);
        let mid = buf.len() / 2;
        let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
        knots.push((i, *m));
        if i == n - 1 {
            break;
        }
        i = (i + stride).min(n - 1);
    }
    let mut out = Vec::with_capacity(n);
    for w in knots.windows(2) {
        let ((i0, v0), (i1, v1)) = (w[0], w[1]);
        for k in i0..i1 {
            out.push(v0 + (v1 - v0) * (k - i0) as f64 / (i1 - i0) as f64);
        }
    }
    out.push(knots.last().unwrap().1);
    out
}

/// Smoothed, baseline-corrected signal used for P/QRS/T delineation.
pub fn low_frequency_signal(signal: &[f64], rate: f64) -> Vec<f64> {
    let smooth_width = secs(rate, 0.025) | 1;
    let smoothed = centred_mean(signal, smooth_width);
    let stride = secs(rate, 0.014).max(1);
    let short = strided_median(&smoothed, secs(rate, 0.2) | 1, stride);
    let baseline = strided_median(&short, secs(rate, 0.6) | 1, stride);
    smoothed.iter().zip(&baseline).map(|(s, b)| s - b).collect()
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> Option<usize> {
    (lo..hi).max_by(|a, b| x[*a].total_cmp(&x[*b]).then(b.cmp(a)))
}

fn min_over(x: &[f64], lo: usize, hi: usize) -> f64 {
    x[lo..hi.max(lo + 1).min(x.len())].iter().cloned().fold(f64::INFINITY, f64::min)
}

struct Wave {
    onset: usize,
    peak: usize,
    offset: usize,
}

/// Locate a positive wave whose peak lies strictly inside `[lo, hi]`.
///
/// `left_base` and `right_base` are the ranges whose minima serve as the
/// isoelectric level on either side; `onset_floor` and `offset_ceil` bound
/// the onset/offset walks.
fn find_wave(
    lf: &[f64],
    lo: usize,
    hi: usize,
    min_height: f64,
    onset_floor: usize,
    offset_ceil: usize,
    right_base_end: usize,
) -> Option<Wave> {
    if hi <= lo + 2 || hi >= lf.len() {
        return None;
    }
    let peak = argmax(lf, lo, hi + 1)?;
    if peak == lo || peak == hi {
        return None;
    }
    let left_base = min_over(lf, lo, peak + 1);
    let right_base = min_over(lf, peak, right_base_end.max(peak + 1) + 1);
    let left_h = lf[peak] - left_base;
    let right_h = lf[peak] - right_base;
    if left_h.min(right_h) < min_height {
        return None;
    }
    let left_level = left_base + EDGE_FRACTION * left_h;
    let right_level = right_base + EDGE_FRACTION * right_h;
    let mut onset = peak;
    while lf[onset] > left_level {
        if onset <= onset_floor {
            return None;
        }
        onset -= 1;
    }
    let mut offset = peak;
    while lf[offset] > right_level {
        if offset >= offset_ceil || offset + 1 >= lf.len() {
            return None;
        }
        offset += 1;
    }
    Some(Wave {
        onset,
        peak,
        offset,
    })
}

/// Delineate every beat. `r_peaks` must be sorted; one [`FiducialSet`] is
/// returned per peak, with points that could not be located set to `None`.
pub fn delineate(signal: &[f64], r_peaks: &[usize], rate: f64) -> Vec<FiducialSet> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let lf = low_frequency_signal(signal, rate);
    let abs_lf: Vec<f64> = lf.iter().map(|v| v.abs()).collect();

    let refine = secs(rate, R_REFINE_S);
    let mut refined: Vec<usize> = Vec::with_capacity(r_peaks.len());
    for &r0 in r_peaks {
        let r0 = r0.min(n - 1);
        let r = argmax(&abs_lf, r0.saturating_sub(refine), (r0 + refine + 1).min(n)).unwrap_or(r0);
        let r = match refined.last() {
            Some(&prev) if r <= prev => r0.max(prev + 1).min(n - 1),
            _ => r,
        };
        refined.push(r);
    }

    let q_win = secs(rate, Q_WINDOW_S);
    let s_win = secs(rate, S_WINDOW_S);
    let guard = secs(rate, TROUGH_GUARD_S);

    let mut out = Vec::with_capacity(refined.len());
    for (i, &r) in refined.iter().enumerate() {
        let prev_mid = if i > 0 { (refined[i - 1] + r) / 2 } else { 0 };
        let next_mid = refined.get(i + 1).map_or(n - 1, |&nx| (r + nx) / 2);
        let min_height = (0.05 * abs_lf[r]).max(0.03);

        // Q: nearest slope-sign change before R
        let mut k = r;
        while k > 0 && r - k < q_win && lf[k - 1] < lf[k] {
            k -= 1;
        }
        let q = (k > 0 && k < r && r - k < q_win && k > prev_mid).then_some(k);

        let mut k = r;
        while k + 1 < n && k - r < s_win && lf[k + 1] < lf[k] {
            k += 1;
        }
        let s = (k + 1 < n && k > r && k - r < s_win && k < next_mid).then_some(k);

        let p_lo = r.saturating_sub(secs(rate, P_LOOKBACK_S)).max(prev_mid);
        let p_hi = q.unwrap_or(r.saturating_sub(secs(rate, 0.05)));
        let p_wave = find_wave(
            &lf,
            p_lo,
            p_hi.saturating_sub(guard),
            min_height,
            p_lo,
            p_hi.saturating_sub(1),
            p_hi.saturating_sub(guard),
        );

        let s_ref = s.unwrap_or(r + secs(rate, 0.06));
        let t_lo = s_ref + secs(rate, T_START_S);
        let t_hi = (s_ref + secs(rate, T_END_S)).min(next_mid);
        let t_wave = find_wave(
            &lf,
            t_lo,
            t_hi,
            min_height,
            s_ref + guard,
            t_hi,
            t_hi,
        )
        .filter(|_| t_lo < t_hi);

        let mut set = FiducialSet {
            beat_index: i,
            ps: p_wave.as_ref().map(|w| w.onset),
            p: p_wave.as_ref().map(|w| w.peak),
            pe: p_wave.as_ref().map(|w| w.offset),
            q,
            r,
            s,
            ts: t_wave.as_ref().map(|w| w.onset),
            t: t_wave.as_ref().map(|w| w.peak),
            te: t_wave.as_ref().map(|w| w.offset),
        };
        enforce_order(&mut set);
        out.push(set);
    }
    out
}

/// Drop any point that would break PS ≤ P ≤ PE ≤ Q ≤ R ≤ S ≤ TS ≤ T ≤ TE.
fn enforce_order(f: &mut FiducialSet) {
    let r = f.r;
    let mut bound = r;
    for slot in [&mut f.q, &mut f.pe, &mut f.p, &mut f.ps] {
        match *slot {
            Some(v) if v <= bound => bound = v,
            _ => *slot = None,
        }
    }
    let mut bound = r;
    for slot in [&mut f.s, &mut f.ts, &mut f.t, &mut f.te] {
        match *slot {
            Some(v) if v >= bound => bound = v,
            _ => *slot = None,
        }
    }
    if f.p.is_none() {
        f.ps = None;
        f.pe = None;
    }
    if f.t.is_none() {
        f.ts = None;
        f.te = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpta::run_chain;
    use crate::record::{synthesize_record, SynthSpec};

    fn delineated(spec: &SynthSpec) -> (Vec<FiducialSet>, Vec<FiducialSet>) {
        let rec = synthesize_record(spec).unwrap();
        let x = rec.record.channel_mv(0);
        let out = run_chain(&x, 360.0).unwrap();
        (delineate(&x, &out.r_peaks, 360.0), rec.truth)
    }

    #[test]
    fn nominal_beats_within_25ms_of_truth() {
        let (found, truth) = delineated(&SynthSpec::new(72.0, 20.0));
        assert_eq!(found.len(), truth.len());
        for (f, t) in found.iter().zip(&truth) {
            for (k, (a, b)) in f.points().iter().zip(t.points()).enumerate() {
                let (a, b) = (a.expect("point found"), b.unwrap());
                assert!(a.abs_diff(b) <= 9, "beat {} point {k}: {a} vs {b}", f.beat_index);
            }
        }
    }

    #[test]
    fn qrs_duration_near_ninety_ms() {
        let (found, _) = delineated(&SynthSpec::new(60.0, 10.0));
        for f in &found {
            let qrs = (f.s.unwrap() - f.q.unwrap()) as f64 / 360.0;
            assert!((qrs - 0.09).abs() <= 0.020, "{qrs}");
        }
    }

    #[test]
    fn absent_p_wave_is_missing() {
        let mut spec = SynthSpec::new(60.0, 10.0);
        spec.morphology.p.amplitude_mv = 0.0;
        let (found, _) = delineated(&spec);
        for f in &found {
            assert_eq!((f.ps, f.p, f.pe), (None, None, None));
            assert!(f.t.is_some());
        }
    }

    #[test]
    fn qrs_upstroke_has_max_derivative() {
        // brute-force argmax of the derivative stage over one beat
        let rec = synthesize_record(&SynthSpec::new(60.0, 3.0)).unwrap();
        let x = rec.record.channel_mv(0);
        let out = run_chain(&x, 360.0).unwrap();
        let truth = rec.truth[1];
        let d = &out.differentiated;
        let lo = truth.r - 180 + d.group_delay;
        let hi = truth.r + 180 + d.group_delay;
        let mut best = lo;
        for k in lo..hi {
            if d.samples[k] > d.samples[best] {
                best = k;
            }
        }
        let t = best - d.group_delay;
        assert!(t > truth.q.unwrap() && t <= truth.r, "{t} not in ({:?}, {}]", truth.q, truth.r);
    }

    #[test]
    fn order_enforced() {
        let mut f = FiducialSet::only_r(0, 100);
        f.p = Some(50);
        f.ps = Some(60);
        f.pe = Some(70);
        f.t = Some(150);
        f.te = Some(140);
        enforce_order(&mut f);
        assert_eq!(f.ps, None);
        assert_eq!(f.p, Some(50));
        assert_eq!(f.te, None);
        assert!(f.is_ordered());
    }
}
