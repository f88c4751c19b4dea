//! Synthetic ECG generator with exact fiducial ground truth.
//!
//! Each beat is a sum of five Gaussian bumps (P, Q, R, S, T). A wave's
//! peak is its bump centre; onset and offset are where the bump falls to
//! 10% of its height, i.e. centre ∓ σ·√(2 ln 10).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{BeatAnnotation, BeatSymbol, EcgRecord, RecordError};
use crate::mpta::FiducialSet;

/// Onset/offset distance from the centre of a Gaussian bump, in units of σ.
pub(crate) fn edge_sigmas() -> f64 {
    (2.0 * 10f64.ln()).sqrt()
}

const ADC_GAIN: f64 = 200.0;
const ADC_BASELINE: i32 = 1024;
const ADC_BITS: u32 = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveShape {
    pub amplitude_mv: f64,
    /// Centre relative to the R peak, seconds.
    pub offset_s: f64,
    /// Gaussian σ, seconds.
    pub width_s: f64,
}

impl WaveShape {
    pub const fn new(amplitude_mv: f64, offset_s: f64, width_s: f64) -> Self {
        Self {
            amplitude_mv,
            offset_s,
            width_s,
        }
    }

    fn present(&self) -> bool {
        self.amplitude_mv != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatMorphology {
    pub p: WaveShape,
    pub q: WaveShape,
    pub r: WaveShape,
    pub s: WaveShape,
    pub t: WaveShape,
}

impl BeatMorphology {
    /// Normal sinus beat near textbook amplitudes and durations: P 0.25 mV,
    /// R 1.6 mV with Q at 25% of R, PR interval 0.19 s, QRS 0.09 s
    /// (Q trough to S trough), QT 0.41 s at 60 bpm.
    pub fn nominal() -> Self {
        Self {
            p: WaveShape::new(0.25, -0.19, 0.022),
            q: WaveShape::new(-0.4, -0.045, 0.010),
            r: WaveShape::new(1.6, 0.0, 0.010),
            s: WaveShape::new(-0.4, 0.045, 0.010),
            t: WaveShape::new(0.35, 0.28, 0.040),
        }
    }

    /// Premature ventricular beat: no P wave, wide QRS, broad T wave.
    pub fn ventricular() -> Self {
        Self {
            p: WaveShape::new(0.0, -0.19, 0.022),
            q: WaveShape::new(-0.3, -0.07, 0.015),
            r: WaveShape::new(1.3, 0.0, 0.025),
            s: WaveShape::new(-0.5, 0.07, 0.015),
            t: WaveShape::new(0.45, 0.32, 0.055),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineWander {
    pub frequency_hz: f64,
    pub amplitude_mv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub record_id: String,
    pub heart_rate_bpm: f64,
    pub duration_s: f64,
    pub sampling_rate: u32,
    pub morphology: BeatMorphology,
    /// Standard deviation of additive white Gaussian noise, mV.
    pub noise_mv: f64,
    pub baseline_wander: Option<BaselineWander>,
    /// Probability that a beat (other than the first) is a premature
    /// ventricular beat.
    pub ectopic_fraction: f64,
    /// Uniform R-peak jitter as a fraction of the RR interval.
    pub rr_jitter: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(heart_rate_bpm: f64, duration_s: f64) -> Self {
        Self {
            record_id: "synthetic".into(),
            heart_rate_bpm,
            duration_s,
            sampling_rate: 360,
            morphology: BeatMorphology::nominal(),
            noise_mv: 0.0,
            baseline_wander: None,
            ectopic_fraction: 0.0,
            rr_jitter: 0.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), RecordError> {
        let bad = |m: &str| Err(RecordError::InvalidSpec(m.into()));
        if !(self.heart_rate_bpm > 0.0) || !self.heart_rate_bpm.is_finite() {
            return bad("heart rate must be positive");
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return bad("duration must be positive");
        }
        if self.sampling_rate == 0 {
            return bad("sampling rate must be positive");
        }
        if !(self.noise_mv >= 0.0) {
            return bad("noise amplitude must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.ectopic_fraction) {
            return bad("ectopic fraction must lie in [0, 1]");
        }
        if !(0.0..0.25).contains(&self.rr_jitter) {
            return bad("RR jitter must lie in [0, 0.25)");
        }
        if let Some(w) = self.baseline_wander {
            if !(w.frequency_hz > 0.0) {
                return bad("baseline wander frequency must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticRecord {
    pub record: EcgRecord,
    pub truth: Vec<FiducialSet>,
    /// The generated signal in mV before ADC quantisation.
    pub signal_mv: Vec<f64>,
}

struct PlacedBeat {
    r_time: f64,
    morphology: BeatMorphology,
    symbol: BeatSymbol,
}

pub fn synthesize_record(spec: &SynthSpec) -> Result<SyntheticRecord, RecordError> {
    spec.validate()?;
    let fs = f64::from(spec.sampling_rate);
    let n_samples = (spec.duration_s * fs).round() as usize;
    let rr = 60.0 / spec.heart_rate_bpm;
    let n_beats = (spec.duration_s / rr + 1e-9).floor() as usize;
    // P and T timing shortens with heart rate; QRS does not.
    let stretch = rr.sqrt().min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut beats = Vec::with_capacity(n_beats);
    for k in 0..n_beats {
        let mut r_time = (k as f64 + 0.5) * rr;
        let ectopic = k > 0 && spec.ectopic_fraction > 0.0 && rng.random::<f64>() < spec.ectopic_fraction;
        if spec.rr_jitter > 0.0 {
            r_time += rng.random_range(-spec.rr_jitter..spec.rr_jitter) * rr;
        }
        let (morphology, symbol) = if ectopic {
            r_time -= 0.25 * rr;
            (BeatMorphology::ventricular(), BeatSymbol::Pvc)
        } else {
            (spec.morphology, BeatSymbol::Normal)
        };
        beats.push(PlacedBeat {
            r_time,
            morphology: scale_morphology(morphology, stretch),
            symbol,
        });
    }

    let mut signal = vec![0.0; n_samples];
    for beat in &beats {
        let m = &beat.morphology;
        for wave in [m.p, m.q, m.r, m.s, m.t] {
            if !wave.present() {
                continue;
            }
            let centre = beat.r_time + wave.offset_s;
            let lo = ((centre - 6.0 * wave.width_s) * fs).floor().max(0.0) as usize;
            let hi = (((centre + 6.0 * wave.width_s) * fs).ceil().max(0.0) as usize).min(n_samples);
            for (i, v) in signal.iter_mut().enumerate().take(hi).skip(lo) {
                let z = (i as f64 / fs - centre) / wave.width_s;
                *v += wave.amplitude_mv * (-0.5 * z * z).exp();
            }
        }
    }
    if let Some(w) = spec.baseline_wander {
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        for (i, v) in signal.iter_mut().enumerate() {
            *v += w.amplitude_mv * (std::f64::consts::TAU * w.frequency_hz * i as f64 / fs + phase).sin();
        }
    }
    if spec.noise_mv > 0.0 {
        let normal = Normal::new(0.0, spec.noise_mv).expect("finite noise level");
        for v in signal.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let max_adc = (1i32 << ADC_BITS) - 1;
    let adc: Vec<i32> = signal
        .iter()
        .map(|v| ((v * ADC_GAIN).round() as i32 + ADC_BASELINE).clamp(0, max_adc))
        .collect();

    let to_index = |t: f64| -> Option<usize> {
        let i = (t * fs).round();
        (i >= 0.0 && (i as usize) < n_samples).then_some(i as usize)
    };
    let edge = edge_sigmas();
    let mut truth = Vec::with_capacity(beats.len());
    let mut annotations = Vec::with_capacity(beats.len());
    for (beat_index, beat) in beats.iter().enumerate() {
        let m = &beat.morphology;
        let centre = |w: &WaveShape| beat.r_time + w.offset_s;
        let wave_points = |w: &WaveShape| -> [Option<usize>; 3] {
            if !w.present() {
                return [None; 3];
            }
            let c = centre(w);
            [
                to_index(c - edge * w.width_s),
                to_index(c),
                to_index(c + edge * w.width_s),
            ]
        };
        let Some(r) = to_index(beat.r_time) else {
            continue;
        };
        let [ps, p, pe] = wave_points(&m.p);
        let [ts, t, te] = wave_points(&m.t);
        let q = if m.q.present() { to_index(centre(&m.q)) } else { None };
        let s = if m.s.present() { to_index(centre(&m.s)) } else { None };
        truth.push(FiducialSet {
            beat_index,
            ps,
            p,
            pe,
            q,
            r,
            s,
            ts,
            t,
            te,
        });
        annotations.push(BeatAnnotation {
            sample_index: r,
            symbol: beat.symbol,
        });
    }

    let record = EcgRecord::new(
        spec.record_id.clone(),
        spec.sampling_rate,
        ADC_BITS,
        vec![adc],
        vec![ADC_GAIN],
        vec![ADC_BASELINE],
        annotations,
    )?;
    Ok(SyntheticRecord {
        record,
        truth,
        signal_mv: signal,
    })
}

fn scale_morphology(mut m: BeatMorphology, stretch: f64) -> BeatMorphology {
    for w in [&mut m.p, &mut m.t] {
        w.offset_s *= stretch;
        w.width_s *= stretch;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_bpm_ten_seconds() {
        let rec = synthesize_record(&SynthSpec::new(60.0, 10.0)).unwrap();
        assert_eq!(rec.truth.len(), 10);
        let rs: Vec<usize> = rec.truth.iter().map(|f| f.r).collect();
        for w in rs.windows(2) {
            assert_eq!(w[1] - w[0], 360);
        }
        assert_eq!(rec.record.annotations.len(), 10);
        assert_eq!(rec.record.len(), 3600);
    }

    #[test]
    fn nominal_qrs_is_ninety_ms() {
        let rec = synthesize_record(&SynthSpec::new(72.0, 5.0)).unwrap();
        for f in &rec.truth {
            let qrs = (f.s.unwrap() - f.q.unwrap()) as f64 / 360.0;
            // 0.09 s is 32.4 samples, so each beat rounds to 32 or 33
            assert!((qrs - 0.09).abs() <= 1.0 / 360.0, "{qrs}");
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            synthesize_record(&SynthSpec::new(0.0, 10.0)),
            Err(RecordError::InvalidSpec(_))
        ));
        assert!(matches!(
            synthesize_record(&SynthSpec::new(60.0, -1.0)),
            Err(RecordError::InvalidSpec(_))
        ));
    }

    #[test]
    fn beat_count_matches_rate() {
        for (bpm, dur) in [(45.0, 17.3), (150.0, 9.9), (73.0, 30.0), (101.0, 12.0)] {
            let rec = synthesize_record(&SynthSpec::new(bpm, dur)).unwrap();
            let expected = (dur * bpm / 60.0_f64).floor() as i64;
            assert!((rec.truth.len() as i64 - expected).abs() <= 1, "{bpm} {dur}");
        }
    }

    #[test]
    fn baseline_wander_dominates_low_band() {
        let mut spec = SynthSpec::new(60.0, 20.0);
        spec.baseline_wander = Some(BaselineWander {
            frequency_hz: 0.25,
            amplitude_mv: 0.2,
        });
        let rec = synthesize_record(&spec).unwrap();
        let x = &rec.signal_mv;
        let n = x.len() as f64;
        // Plain DFT over bins 1..=18 (0.05 Hz .. 0.9 Hz).
        let power = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                let a = std::f64::consts::TAU * k as f64 * i as f64 / n;
                re += v * a.cos();
                im -= v * a.sin();
            }
            re * re + im * im
        };
        let best = (1..=18).max_by(|a, b| power(*a).total_cmp(&power(*b))).unwrap();
        assert_eq!(best, 5, "0.25 Hz is bin 5 at 0.05 Hz resolution");
    }

    #[test]
    fn missing_p_wave_has_no_truth() {
        let mut spec = SynthSpec::new(60.0, 3.0);
        spec.morphology.p.amplitude_mv = 0.0;
        let rec = synthesize_record(&spec).unwrap();
        assert!(rec.truth.iter().all(|f| f.p.is_none() && f.ps.is_none() && f.pe.is_none()));
    }

    #[test]
    fn ectopic_beats_are_labelled() {
        let mut spec = SynthSpec::new(75.0, 60.0);
        spec.ectopic_fraction = 0.3;
        spec.seed = 7;
        let rec = synthesize_record(&spec).unwrap();
        let v = rec.record.annotations.iter().filter(|a| a.symbol == BeatSymbol::Pvc).count();
        assert!(v > 5 && v < rec.truth.len());
    }
}
