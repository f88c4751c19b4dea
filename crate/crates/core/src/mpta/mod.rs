//! Modified Pan-Tompkins chain: bandpass, derivative, squaring, moving-window
//! integration and adaptive thresholding, followed by delineation of the
//! nine fiducial points of each beat.

mod delineate;
mod detect;
mod filters;

use std::io::Write;

pub use delineate::{delineate, low_frequency_signal};
pub use detect::detect_r_peaks;
pub use filters::{bandpass, bandpass_order, derivative, integrate, integration_window, square};

#[derive(Debug, thiserror::Error)]
pub enum MptaError {
    #[error("signal of {len} samples is shorter than the filter order {required}")]
    SignalTooShort { len: usize, required: usize },
    #[error("integration window must be at least one sample")]
    InvalidWindow,
    #[error("sampling rate {0} is not positive")]
    InvalidRate(f64),
    #[error("integrated and bandpassed signals differ in length or rate")]
    Mismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Raw,
    Bandpassed,
    Differentiated,
    Squared,
    Integrated,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Bandpassed => "bandpassed",
            Stage::Differentiated => "differentiated",
            Stage::Squared => "squared",
            Stage::Integrated => "integrated",
        }
    }
}

/// Output of one chain stage. `group_delay` is cumulative from the raw signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSignal {
    pub samples: Vec<f64>,
    pub stage: Stage,
    pub sampling_rate: f64,
    pub group_delay: usize,
}

impl FilteredSignal {
    pub fn raw(samples: Vec<f64>, sampling_rate: f64) -> Self {
        Self {
            samples,
            stage: Stage::Raw,
            sampling_rate,
            group_delay: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Comma-separated `index,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,{}", self.stage.name())?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        Ok(())
    }
}

/// The nine characteristic points of one beat, as sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FiducialSet {
    pub beat_index: usize,
    pub ps: Option<usize>,
    pub p: Option<usize>,
    pub pe: Option<usize>,
    pub q: Option<usize>,
    pub r: usize,
    pub s: Option<usize>,
    pub ts: Option<usize>,
    pub t: Option<usize>,
    pub te: Option<usize>,
}

impl FiducialSet {
    pub fn only_r(beat_index: usize, r: usize) -> Self {
        Self {
            beat_index,
            r,
            ..Self::default()
        }
    }

    /// Points in their physiological order PS, P, PE, Q, R, S, TS, T, TE.
    pub fn points(&self) -> [Option<usize>; 9] {
        [
            self.ps,
            self.p,
            self.pe,
            self.q,
            Some(self.r),
            self.s,
            self.ts,
            self.t,
            self.te,
        ]
    }

    pub fn is_ordered(&self) -> bool {
        let present: Vec<usize> = self.points().into_iter().flatten().collect();
        present.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn shifted(&self, offset: usize) -> Self {
        let sh = |v: Option<usize>| v.map(|x| x + offset);
        Self {
            beat_index: self.beat_index,
            ps: sh(self.ps),
            p: sh(self.p),
            pe: sh(self.pe),
            q: sh(self.q),
            r: self.r + offset,
            s: sh(self.s),
            ts: sh(self.ts),
            t: sh(self.t),
            te: sh(self.te),
        }
    }
}

/// Every stage of the chain plus the detected R peaks.
#[derive(Debug, Clone)]
pub struct MptaOutput {
    pub bandpassed: FilteredSignal,
    pub differentiated: FilteredSignal,
    pub squared: FilteredSignal,
    pub integrated: FilteredSignal,
    pub r_peaks: Vec<usize>,
}

impl MptaOutput {
    pub fn stages(&self) -> [&FilteredSignal; 4] {
        [
            &self.bandpassed,
            &self.differentiated,
            &self.squared,
            &self.integrated,
        ]
    }
}

/// Run the full detection chain on a signal in millivolts.
pub fn run_chain(signal: &[f64], rate: f64) -> Result<MptaOutput, MptaError> {
    let bandpassed = bandpass(signal, rate)?;
    let differentiated = derivative(&bandpassed);
    let squared = square(&differentiated);
    let integrated = integrate(&squared, integration_window(rate))?;
    let r_peaks = detect_r_peaks(&integrated, &bandpassed)?;
    Ok(MptaOutput {
        bandpassed,
        differentiated,
        squared,
        integrated,
        r_peaks,
    })
}

/// One-to-one matching of detections against reference beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PeakMatch {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl PeakMatch {
    pub fn sensitivity(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    pub fn merge(self, other: PeakMatch) -> PeakMatch {
        PeakMatch {
            true_positives: self.true_positives + other.true_positives,
            false_positives: self.false_positives + other.false_positives,
            false_negatives: self.false_negatives + other.false_negatives,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Pair each detection with its nearest reference index. Returns, for each
/// detection, the index of the matched reference (if any within `tolerance`).
pub fn pair_peaks(detected: &[usize], reference: &[usize], tolerance: usize) -> Vec<Option<usize>> {
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (di, &d) in detected.iter().enumerate() {
        let lo = reference.partition_point(|&r| r + tolerance < d);
        for (ri, &r) in reference.iter().enumerate().skip(lo) {
            if r > d + tolerance {
                break;
            }
            candidates.push((d.abs_diff(r), di, ri));
        }
    }
    candidates.sort_unstable();
    let mut det_used = vec![None; detected.len()];
    let mut ref_used = vec![false; reference.len()];
    for (_, di, ri) in candidates {
        if det_used[di].is_none() && !ref_used[ri] {
            det_used[di] = Some(ri);
            ref_used[ri] = true;
        }
    }
    det_used
}

pub fn match_peaks(detected: &[usize], reference: &[usize], tolerance: usize) -> PeakMatch {
    let pairs = pair_peaks(detected, reference, tolerance);
    let tp = pairs.iter().filter(|p| p.is_some()).count();
    PeakMatch {
        true_positives: tp,
        false_positives: detected.len() - tp,
        false_negatives: reference.len() - tp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_counts() {
        let m = match_peaks(&[10, 100, 300], &[12, 95, 200], 10);
        assert_eq!(
            m,
            PeakMatch {
                true_positives: 2,
                false_positives: 1,
                false_negatives: 1
            }
        );
    }

    #[test]
    fn matching_is_one_to_one() {
        let m = match_peaks(&[10, 11], &[10], 5);
        assert_eq!(m.true_positives, 1);
        assert_eq!(m.false_positives, 1);
    }

    #[test]
    fn ordering_check() {
        let mut f = FiducialSet::only_r(0, 100);
        f.q = Some(90);
        f.s = Some(110);
        assert!(f.is_ordered());
        f.ts = Some(105);
        assert!(!f.is_ordered());
    }
}
