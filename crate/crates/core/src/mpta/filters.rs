//! Bandpass, derivative, squaring and moving-window integration stages.
//!
//! Coefficients follow the integer-coefficient Pan-Tompkins structure,
//! re-dimensioned for the sampling rate:
//!
//! * low-pass: squared moving sum of length `m ≈ 30 ms`, delay `m - 1`
//! * high-pass: all-pass delay minus a moving average of odd length
//!   `L ≈ 160 ms`, delay `(L - 1) / 2`
//!
//! At 360 Hz this gives `m = 11`, `L = 59` and a combined delay of 39
//! samples. Both sections are linear phase, so a symmetric QRS keeps its
//! peak at exactly the group delay.

use super::{FilteredSignal, MptaError, Stage};

fn lowpass_len(rate: f64) -> usize {
    ((0.030 * rate).round() as usize).max(2)
}

fn highpass_len(rate: f64) -> usize {
    2 * ((0.080 * rate).round() as usize).max(1) + 1
}

/// Minimum input length accepted by [`bandpass`].
pub fn bandpass_order(rate: f64) -> usize {
    2 * (lowpass_len(rate) - 1) + highpass_len(rate) - 1
}

/// Samples before the start are taken equal to the first sample, so a
/// constant input produces an exactly zero output.
#[inline]
fn at(x: &[f64], k: isize) -> f64 {
    if k < 0 {
        x[0]
    } else {
        x[k as usize]
    }
}

fn moving_sum(x: &[f64], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = len as f64 * x[0];
    for n in 0..x.len() as isize {
        acc += at(x, n) - at(x, n - len as isize);
        out.push(acc);
    }
    out
}

pub fn bandpass(signal: &[f64], rate: f64) -> Result<FilteredSignal, MptaError> {
    if !(rate > 0.0) {
        return Err(MptaError::InvalidRate(rate));
    }
    let order = bandpass_order(rate);
    if signal.len() < order {
        return Err(MptaError::SignalTooShort {
            len: signal.len(),
            required: order,
        });
    }
    let m = lowpass_len(rate);
    let l = highpass_len(rate);

    // y[n] = 2y[n-1] - y[n-2] + x[n] - 2x[n-m] + x[n-2m], normalised by m².
    let lp: Vec<f64> = moving_sum(&moving_sum(signal, m), m)
        .into_iter()
        .map(|v| v / (m * m) as f64)
        .collect();

    // y[n] = x[n-d] - (1/L)·Σ_{k<L} x[n-k]
    let d = (l - 1) / 2;
    let avg = moving_sum(&lp, l);
    let hp = (0..lp.len() as isize)
        .map(|n| at(&lp, n - d as isize) - avg[n as usize] / l as f64)
        .collect();

    Ok(FilteredSignal {
        samples: hp,
        stage: Stage::Bandpassed,
        sampling_rate: rate,
        group_delay: (m - 1) + d,
    })
}

/// Five-point derivative `y[n] = (rate/8)(2x[n] + x[n-1] - x[n-3] - 2x[n-4])`.
pub fn derivative(input: &FilteredSignal) -> FilteredSignal {
    let x = &input.samples;
    let scale = input.sampling_rate / 8.0;
    let samples = if x.is_empty() {
        Vec::new()
    } else {
        (0..x.len() as isize)
            .map(|n| scale * (2.0 * at(x, n) + at(x, n - 1) - at(x, n - 3) - 2.0 * at(x, n - 4)))
            .collect()
    };
    FilteredSignal {
        samples,
        stage: Stage::Differentiated,
        sampling_rate: input.sampling_rate,
        group_delay: input.group_delay + 2,
    }
}

pub fn square(input: &FilteredSignal) -> FilteredSignal {
    FilteredSignal {
        samples: input.samples.iter().map(|v| v * v).collect(),
        stage: Stage::Squared,
        sampling_rate: input.sampling_rate,
        group_delay: input.group_delay,
    }
}

/// Moving-window mean over the last `window` samples, zero-padded on the left.
pub fn integrate(input: &FilteredSignal, window: usize) -> Result<FilteredSignal, MptaError> {
    if window == 0 {
        return Err(MptaError::InvalidWindow);
    }
    let x = &input.samples;
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for n in 0..x.len() {
        acc += x[n];
        if n >= window {
            acc -= x[n - window];
        }
        out.push(acc / window as f64);
    }
    Ok(FilteredSignal {
        samples: out,
        stage: Stage::Integrated,
        sampling_rate: input.sampling_rate,
        group_delay: input.group_delay + (window - 1) / 2,
    })
}

/// Integration window of 150 ms.
pub fn integration_window(rate: f64) -> usize {
    ((0.150 * rate).round() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(samples: Vec<f64>) -> FilteredSignal {
        FilteredSignal::raw(samples, 360.0)
    }

    /// Direct-form FIR oracle: the bandpass impulse response written out as
    /// explicit taps (triangle of the squared moving sum, convolved with
    /// delta-minus-boxcar).
    fn fir_bandpass(x: &[f64], rate: f64) -> Vec<f64> {
        let m = lowpass_len(rate);
        let l = highpass_len(rate);
        let mut lp_taps = vec![0.0; 2 * m - 1];
        for i in 0..m {
            for j in 0..m {
                lp_taps[i + j] += 1.0 / (m * m) as f64;
            }
        }
        let mut hp_taps = vec![-1.0 / l as f64; l];
        hp_taps[(l - 1) / 2] += 1.0;
        let mut taps = vec![0.0; lp_taps.len() + hp_taps.len() - 1];
        for (i, a) in lp_taps.iter().enumerate() {
            for (j, b) in hp_taps.iter().enumerate() {
                taps[i + j] += a * b;
            }
        }
        (0..x.len())
            .map(|n| {
                taps.iter()
                    .enumerate()
                    .map(|(k, t)| t * if k > n { x[0] } else { x[n - k] })
                    .sum()
            })
            .collect()
    }

    fn steady_gain(freq: f64) -> f64 {
        let rate = 360.0;
        let x: Vec<f64> = (0..(rate as usize * 40))
            .map(|i| (std::f64::consts::TAU * freq * i as f64 / rate).sin())
            .collect();
        let y = fir_bandpass(&x, rate);
        let tail = &y[y.len() / 2..];
        tail.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn recursive_form_matches_fir_oracle() {
        let x: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let y = bandpass(&x, 360.0).unwrap();
        let oracle = fir_bandpass(&x, 360.0);
        for (a, b) in y.samples.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert_eq!(y.group_delay, 39);
    }

    #[test]
    fn constant_rejected() {
        let y = bandpass(&vec![3.5; 1000], 360.0).unwrap();
        assert!(y.samples.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn passband_and_stopband_gain() {
        let ten = steady_gain(10.0);
        let wander = steady_gain(0.2);
        assert!(ten >= 0.7, "10 Hz gain {ten}");
        assert!(wander <= 0.05, "0.2 Hz gain {wander}");
        // frozen from the FIR oracle
        assert!((ten - 0.8585).abs() < 2e-3, "{ten}");
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            bandpass(&[0.0; 10], 360.0),
            Err(MptaError::SignalTooShort { len: 10, .. })
        ));
    }

    #[test]
    fn derivative_of_constant_and_ramp() {
        let c = derivative(&raw(vec![2.0; 20]));
        assert!(c.samples.iter().all(|v| *v == 0.0));
        let r = derivative(&raw((0..20).map(f64::from).collect()));
        // (2n + (n-1) - (n-3) - 2(n-4)) / 8 = 10/8, times the rate
        for v in &r.samples[4..] {
            assert!((v - 1.25 * 360.0).abs() < 1e-9);
        }
    }

    #[test]
    fn squaring() {
        let s = square(&raw(vec![-3.0, 0.0, 2.0]));
        assert_eq!(s.samples, vec![9.0, 0.0, 4.0]);
    }

    #[test]
    fn integrator_impulse_and_identity() {
        let mut x = vec![0.0; 30];
        x[5] = 1.0;
        let y = integrate(&raw(x.clone()), 1).unwrap();
        assert_eq!(y.samples, x);
        let y = integrate(&raw(x), 4).unwrap();
        for (i, v) in y.samples.iter().enumerate() {
            let expected = if (5..9).contains(&i) { 0.25 } else { 0.0 };
            assert!((v - expected).abs() < 1e-15, "{i}: {v}");
        }
        assert!(matches!(integrate(&raw(vec![1.0]), 0), Err(MptaError::InvalidWindow)));
    }

    #[test]
    fn delays_accumulate() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let bp = bandpass(&x, 360.0).unwrap();
        let d = derivative(&bp);
        let s = square(&d);
        let w = integrate(&s, 54).unwrap();
        for stage in [&bp, &d, &s, &w] {
            assert_eq!(stage.samples.len(), x.len());
        }
        assert_eq!(w.group_delay, 39 + 2 + 26);
        assert!(s.samples.iter().all(|v| *v >= 0.0));
        assert!(w.samples.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn squared_energy_is_sum_of_fourth_powers() {
        let x: Vec<f64> = (0..800).map(|i| ((i * 37) % 17) as f64 - 8.0).collect();
        let d = derivative(&bandpass(&x, 360.0).unwrap());
        let s = square(&d);
        let energy: f64 = s.samples.iter().map(|v| v * v).sum();
        let mut fourth = 0.0;
        for v in &d.samples {
            fourth += v * v * v * v;
        }
        assert!((energy - fourth).abs() <= 1e-9 * fourth);
    }
}
