//! A trained SVM bundled with its feature mask and scaling, plus the text
//! format used to save and reload it.

use std::fmt::Write as _;

use super::{train, KernelParams, SvmError, SvmModel, TrainConfig};
use crate::features::{fit_scaling, FeatureVector, ScalingParams, N_FEATURES};
use crate::record::BinaryLabel;

const MAGIC: &str = "ecg-eho-model 1";

#[derive(Debug, thiserror::Error)]
#[error("model file line {line}: {message}")]
pub struct ModelFormatError {
    pub line: usize,
    pub message: String,
}

/// Everything needed to classify a raw feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub model: SvmModel,
    pub mask: [bool; N_FEATURES],
    pub scaling: ScalingParams,
    pub training_accuracy: f64,
}

impl Classifier {
    /// Fit scaling on `train`, project onto `mask` and train. A training set
    /// holding a single class yields a constant model for that class.
    pub fn fit(
        train_set: &[&FeatureVector],
        mask: &[bool; N_FEATURES],
        config: &TrainConfig,
        kernel: KernelParams,
    ) -> Result<Self, SvmError> {
        if !mask.iter().any(|m| *m) {
            return Err(SvmError::EmptyMask);
        }
        let scaling = fit_scaling(train_set.iter().copied()).map_err(|_| SvmError::EmptyTrainingSet)?;
        let data: Vec<Vec<f64>> = train_set.iter().map(|v| scaling.apply_masked(v, mask)).collect();
        let labels: Vec<BinaryLabel> = train_set.iter().map(|v| v.label).collect();
        let dim = data[0].len();
        let model = match train(&data, &labels, config, kernel) {
            Ok(out) => out.model,
            Err(SvmError::DegenerateLabels) => SvmModel::constant(labels[0], dim, kernel, config.penalty),
            Err(e) => return Err(e),
        };
        let correct = data
            .iter()
            .zip(&labels)
            .filter(|(x, l)| model.decide(x).map(|d| d.1) == Ok(**l))
            .count();
        Ok(Self {
            model,
            mask: *mask,
            scaling,
            training_accuracy: correct as f64 / data.len() as f64,
        })
    }

    pub fn decide(&self, v: &FeatureVector) -> (f64, BinaryLabel) {
        let x = self.scaling.apply_masked(v, &self.mask);
        self.model
            .decide(&x)
            .expect("mask and model dimension agree by construction")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mask: String = self.mask.iter().map(|m| if *m { '1' } else { '0' }).collect();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "gamma {}", self.model.kernel.gamma).unwrap();
        writeln!(s, "penalty {}", self.model.penalty).unwrap();
        writeln!(s, "bias {}", self.model.bias).unwrap();
        writeln!(s, "mask {mask}").unwrap();
        writeln!(s, "scale_min {}", join(&self.scaling.min)).unwrap();
        writeln!(s, "scale_max {}", join(&self.scaling.max)).unwrap();
        writeln!(s, "training_accuracy {}", self.training_accuracy).unwrap();
        writeln!(s, "dimension {}", self.model.dimension).unwrap();
        writeln!(s, "support_vectors {}", self.model.support_vectors.len()).unwrap();
        for (sv, c) in self.model.support_vectors.iter().zip(&self.model.coefficients) {
            writeln!(s, "{c} {}", join(sv)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFormatError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let err = |line: usize, message: &str| ModelFormatError {
            line,
            message: message.to_string(),
        };
        let (n, first) = lines.next().ok_or_else(|| err(1, "empty model file"))?;
        if first != MAGIC {
            return Err(err(n, "not a model file"));
        }
        let mut field = |name: &str| -> Result<(usize, String), ModelFormatError> {
            let (n, l) = lines.next().ok_or_else(|| err(0, &format!("missing {name}")))?;
            let rest = l
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None }))
                .ok_or_else(|| err(n, &format!("expected {name}")))?;
            Ok((n, rest.to_string()))
        };
        let num = |n: usize, s: &str| -> Result<f64, ModelFormatError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(n, &format!("bad number {s:?}")))
        };
        let nums = |n: usize, s: &str| -> Result<Vec<f64>, ModelFormatError> {
            s.split_whitespace().map(|t| num(n, t)).collect()
        };

        let (n, v) = field("gamma")?;
        let kernel = KernelParams::new(num(n, &v)?).map_err(|e| err(n, &e.to_string()))?;
        let (n, v) = field("penalty")?;
        let penalty = num(n, &v)?;
        let (n, v) = field("bias")?;
        let bias = num(n, &v)?;
        let (n, v) = field("mask")?;
        if v.len() != N_FEATURES || !v.chars().all(|c| c == '0' || c == '1') {
            return Err(err(n, "mask must be 19 binary digits"));
        }
        let mut mask = [false; N_FEATURES];
        for (m, c) in mask.iter_mut().zip(v.chars()) {
            *m = c == '1';
        }
        let mut bounds = [[0.0; N_FEATURES]; 2];
        for (b, name) in bounds.iter_mut().zip(["scale_min", "scale_max"]) {
            let (n, v) = field(name)?;
            let xs = nums(n, &v)?;
            if xs.len() != N_FEATURES {
                return Err(err(n, "expected 19 values"));
            }
            b.copy_from_slice(&xs);
        }
        let (n, v) = field("training_accuracy")?;
        let training_accuracy = num(n, &v)?;
        let (n, v) = field("dimension")?;
        let dimension: usize = v.parse().map_err(|_| err(n, "bad dimension"))?;
        if dimension != mask.iter().filter(|m| **m).count() {
            return Err(err(n, "dimension disagrees with mask"));
        }
        let (n, v) = field("support_vectors")?;
        let count: usize = v.parse().map_err(|_| err(n, "bad support vector count"))?;
        let mut support_vectors = Vec::with_capacity(count);
        let mut coefficients = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = lines.next().ok_or_else(|| err(0, "missing support vector"))?;
            let xs = nums(n, l)?;
            if xs.len() != dimension + 1 {
                return Err(err(n, "support vector has the wrong dimension"));
            }
            coefficients.push(xs[0]);
            support_vectors.push(xs[1..].to_vec());
        }
        Ok(Self {
            model: SvmModel {
                support_vectors,
                coefficients,
                bias,
                kernel,
                penalty,
                dimension,
            },
            mask,
            scaling: ScalingParams {
                min: bounds[0],
                max: bounds[1],
            },
            training_accuracy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::BeatSymbol;

    fn vector(seed: usize, symbol: BeatSymbol) -> FeatureVector {
        let mut values = [0.0; N_FEATURES];
        let shift = if symbol == BeatSymbol::Normal { 1.0 } else { -1.0 };
        for (k, v) in values.iter_mut().enumerate() {
            *v = shift * (k as f64 + 1.0) + ((seed * 31 + k * 7) % 11) as f64 / 10.0;
        }
        FeatureVector {
            values,
            present: [true; N_FEATURES],
            label: symbol.label().unwrap(),
            symbol,
        }
    }

    fn sample() -> Vec<FeatureVector> {
        (0..30)
            .map(|i| vector(i, if i % 3 == 0 { BeatSymbol::Pvc } else { BeatSymbol::Normal }))
            .collect()
    }

    #[test]
    fn fit_and_round_trip() {
        let rows = sample();
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let mut mask = [false; N_FEATURES];
        mask[0] = true;
        mask[5] = true;
        let c = Classifier::fit(&refs, &mask, &TrainConfig::new(10.0), KernelParams::new(0.5).unwrap()).unwrap();
        assert_eq!(c.training_accuracy, 1.0);
        let text = c.to_text();
        let back = Classifier::from_text(&text).unwrap();
        assert_eq!(back, c);
        for v in &rows {
            assert_eq!(back.decide(v), c.decide(v));
        }
    }

    #[test]
    fn single_class_is_constant() {
        let rows: Vec<_> = (0..5).map(|i| vector(i, BeatSymbol::Normal)).collect();
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let c = Classifier::fit(&refs, &[true; N_FEATURES], &TrainConfig::new(1.0), KernelParams::new(1.0).unwrap()).unwrap();
        assert!(c.model.is_constant());
        assert_eq!(c.decide(&vector(9, BeatSymbol::Pvc)).1, BinaryLabel::Normal);
        assert_eq!(Classifier::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn empty_mask_rejected() {
        let rows = sample();
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let r = Classifier::fit(&refs, &[false; N_FEATURES], &TrainConfig::new(1.0), KernelParams::new(1.0).unwrap());
        assert_eq!(r.unwrap_err(), SvmError::EmptyMask);
    }

    #[test]
    fn malformed_files() {
        assert!(Classifier::from_text("").is_err());
        assert!(Classifier::from_text("hello\n").is_err());
        let rows = sample();
        let refs: Vec<&FeatureVector> = rows.iter().collect();
        let c = Classifier::fit(&refs, &[true; N_FEATURES], &TrainConfig::new(1.0), KernelParams::new(1.0).unwrap()).unwrap();
        let text = c.to_text().replace("mask 1111", "mask 11x1");
        let e = Classifier::from_text(&text).unwrap_err();
        assert_eq!(e.line, 5);
        let truncated: String = c.to_text().lines().take(11).collect::<Vec<_>>().join("\n");
        assert!(Classifier::from_text(&truncated).is_err());
    }
}
