//! Mapping between elephant positions and (C, gamma, feature mask).

use std::ops::Range;

use crate::features::N_FEATURES;
use crate::svm::{MAX_GAMMA, MAX_PENALTY, MIN_PENALTY};

/// Position length: C, gamma and one activation per feature.
pub const DIM: usize = 2 + N_FEATURES;
pub const PENALTY_DIM: usize = 0;
pub const GAMMA_DIM: usize = 1;
pub const FEATURE_DIMS: Range<usize> = 2..DIM;
/// Activations above this select the feature.
pub const ACTIVATION_THRESHOLD: f64 = 0.5;

pub fn bounds() -> Vec<(f64, f64)> {
    let mut b = vec![(MIN_PENALTY, MAX_PENALTY), (0.0, MAX_GAMMA)];
    b.extend(std::iter::repeat_n((0.0, 1.0), N_FEATURES));
    b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub penalty: f64,
    pub gamma: f64,
    pub mask: [bool; N_FEATURES],
}

impl Decoded {
    pub fn n_features(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Decode a position, clamping into range. A mask with nothing selected
/// falls back to the single feature with the highest activation.
pub fn decode(position: &[f64]) -> Decoded {
    assert_eq!(position.len(), DIM, "position length");
    let activations = &position[FEATURE_DIMS];
    let mut mask = [false; N_FEATURES];
    for (m, a) in mask.iter_mut().zip(activations) {
        *m = *a > ACTIVATION_THRESHOLD;
    }
    if !mask.iter().any(|m| *m) {
        let mut best = 0;
        for (k, a) in activations.iter().enumerate() {
            if *a > activations[best] {
                best = k;
            }
        }
        mask[best] = true;
    }
    Decoded {
        penalty: position[PENALTY_DIM].clamp(MIN_PENALTY, MAX_PENALTY),
        gamma: position[GAMMA_DIM].clamp(0.0, MAX_GAMMA),
        mask,
    }
}

pub fn encode(d: &Decoded) -> Vec<f64> {
    let mut p = Vec::with_capacity(DIM);
    p.push(d.penalty);
    p.push(d.gamma);
    p.extend(d.mask.iter().map(|m| if *m { 1.0 } else { 0.0 }));
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_mask_falls_back_to_strongest() {
        let mut p = vec![0.0; DIM];
        p[0] = 10.0;
        p[2 + 7] = 0.4;
        p[2 + 3] = 0.4;
        p[2 + 11] = 0.2;
        let d = decode(&p);
        assert_eq!(d.n_features(), 1);
        assert!(d.mask[3]);
    }

    #[test]
    fn out_of_range_clamps() {
        let mut p = vec![1.0; DIM];
        p[0] = 0.0;
        p[1] = 5000.0;
        let d = decode(&p);
        assert_eq!(d.penalty, 1.0);
        assert_eq!(d.gamma, 1000.0);
    }

    proptest! {
        #[test]
        fn round_trip(
            penalty in 1.0f64..=1000.0,
            gamma in 0.0f64..=1000.0,
            mask in prop::array::uniform19(any::<bool>()),
        ) {
            prop_assume!(mask.iter().any(|m| *m));
            let d = Decoded { penalty, gamma, mask };
            prop_assert_eq!(decode(&encode(&d)), d);
        }
    }
}
