//! Min-max scaling of features to [-1, 1].

use super::{FeatureError, FeatureVector, N_FEATURES};

/// Per-feature range observed on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
}

pub fn fit_scaling<'a, I>(train: I) -> Result<ScalingParams, FeatureError>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let mut min = [f64::INFINITY; N_FEATURES];
    let mut max = [f64::NEG_INFINITY; N_FEATURES];
    let mut seen = false;
    for v in train {
        seen = true;
        for k in 0..N_FEATURES {
            min[k] = min[k].min(v.values[k]);
            max[k] = max[k].max(v.values[k]);
        }
    }
    if !seen {
        return Err(FeatureError::EmptyTrainingSet);
    }
    Ok(ScalingParams { min, max })
}

impl ScalingParams {
    /// Map feature `k`: training min to -1, max to +1, constant features to
    /// 0. Values outside the training range clamp to the nearest bound.
    pub fn scale_value(&self, k: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[k], self.max[k]);
        if hi <= lo {
            return 0.0;
        }
        if x <= lo {
            -1.0
        } else if x >= hi {
            1.0
        } else {
            (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
        }
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = v.clone();
        for (k, x) in out.values.iter_mut().enumerate() {
            *x = self.scale_value(k, *x);
        }
        out
    }

    /// Scaled values of the features selected by `mask`.
    pub fn apply_masked(&self, v: &FeatureVector, mask: &[bool]) -> Vec<f64> {
        (0..N_FEATURES)
            .filter(|&k| mask[k])
            .map(|k| self.scale_value(k, v.values[k]))
            .collect()
    }
}
