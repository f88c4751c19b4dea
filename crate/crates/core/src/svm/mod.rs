//! Soft-margin binary SVM with a Gaussian kernel.
//!
//! Training solves the C-SVC dual with sequential minimal optimization and
//! second-order working-set selection. Labels use Normal = +1.

mod classifier;
mod smo;

pub use classifier::{Classifier, ModelFormatError};
pub use smo::{train, TrainOutput};

use crate::record::BinaryLabel;

/// Largest accepted kernel width parameter.
pub const MAX_GAMMA: f64 = 1000.0;
/// Replacement for a zero kernel width parameter.
pub const MIN_GAMMA: f64 = 1e-6;
pub const MIN_PENALTY: f64 = 1.0;
pub const MAX_PENALTY: f64 = 1000.0;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum SvmError {
    #[error("vectors of dimension {0} and {1}")]
    DimensionError(usize, usize),
    #[error("training data contains a single class")]
    DegenerateLabels,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{0} feature vectors but {1} labels")]
    LabelCount(usize, usize),
    #[error("gamma {0} outside [0, 1000]")]
    InvalidGamma(f64),
    #[error("penalty {0} outside [1, 1000]")]
    InvalidPenalty(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("training data contains a non-finite value")]
    NonFinite,
    #[error("feature mask selects no features")]
    EmptyMask,
}

/// Gaussian kernel width, `K(x, z) = exp(-gamma * |x - z|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub gamma: f64,
}

impl KernelParams {
    /// A gamma of zero is replaced by [`MIN_GAMMA`]; the constant kernel it
    /// would give cannot separate anything.
    pub fn new(gamma: f64) -> Result<Self, SvmError> {
        if !(0.0..=MAX_GAMMA).contains(&gamma) {
            return Err(SvmError::InvalidGamma(gamma));
        }
        Ok(Self {
            gamma: if gamma == 0.0 { MIN_GAMMA } else { gamma },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub penalty: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: f64,
    /// Iteration budget, in sweeps over the training set.
    pub max_passes: usize,
    /// Accepted for completeness; the classification objective ignores it.
    pub epsilon: f64,
}

impl TrainConfig {
    pub fn new(penalty: f64) -> Self {
        Self {
            penalty,
            tolerance: 1e-3,
            max_passes: 1000,
            epsilon: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if !(MIN_PENALTY..=MAX_PENALTY).contains(&self.penalty) {
            return Err(SvmError::InvalidPenalty(self.penalty));
        }
        if !(self.tolerance > 0.0) {
            return Err(SvmError::InvalidTolerance(self.tolerance));
        }
        Ok(())
    }
}

pub(crate) fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn kernel(x: &[f64], z: &[f64], params: KernelParams) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionError(x.len(), z.len()));
    }
    Ok((-params.gamma * sq_dist(x, z)).exp())
}

/// A trained model: `f(x) = sum_i coef_i K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i * alpha_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelParams,
    pub penalty: f64,
    pub dimension: usize,
}

impl SvmModel {
    /// A model that always predicts `label`.
    pub fn constant(label: BinaryLabel, dimension: usize, kernel: KernelParams, penalty: f64) -> Self {
        Self {
            support_vectors: Vec::new(),
            coefficients: Vec::new(),
            bias: label.sign(),
            kernel,
            penalty,
            dimension,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.support_vectors.is_empty()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dimension {
            return Err(SvmError::DimensionError(self.dimension, x.len()));
        }
        let g = self.kernel.gamma;
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * (-g * sq_dist(sv, x)).exp())
            .sum();
        Ok(sum + self.bias)
    }

    pub fn decide(&self, x: &[f64]) -> Result<(f64, BinaryLabel), SvmError> {
        let s = self.score(x)?;
        Ok((s, BinaryLabel::from_score(s)))
    }
}

/// Count training points whose multiplier and margin break the KKT
/// conditions by more than `tol`.
pub fn kkt_violations(alphas: &[f64], labels: &[BinaryLabel], decision: &[f64], penalty: f64, tol: f64) -> usize {
    alphas
        .iter()
        .zip(labels)
        .zip(decision)
        .filter(|((a, y), f)| {
            let m = y.sign() * **f;
            let a = **a;
            if a < -tol || a > penalty + tol {
                return true;
            }
            if a <= 0.0 {
                m < 1.0 - tol
            } else if a >= penalty {
                m > 1.0 + tol
            } else {
                (m - 1.0).abs() > tol
            }
        })
        .count()
}
