//! Fold-averaged SVM accuracy as the optimizer's fitness.

use super::encoding::Decoded;
use super::folds::FoldPlan;
use super::PipelineError;
use crate::features::{fit_scaling, FeatureVector, ScalingParams};
use crate::record::BinaryLabel;
use crate::svm::{train, KernelParams, SvmError, SvmModel, TrainConfig};

/// Mean of the per-fold accuracies.
pub fn fold_mean(accuracies: &[f64]) -> f64 {
    if accuracies.is_empty() {
        return 0.0;
    }
    accuracies.iter().sum::<f64>() / accuracies.len() as f64
}

/// Result of cross-validating one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldEvaluation {
    pub fold_accuracies: Vec<f64>,
    /// `fold_mean(fold_accuracies)`, or 0 if any fold failed to train.
    pub fitness: f64,
    /// Validation prediction for every beat.
    pub predictions: Vec<BinaryLabel>,
    pub failed: bool,
}

/// Data, folds and per-fold scaling shared by every fitness evaluation of
/// one patient.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    pub data: Vec<FeatureVector>,
    pub folds: FoldPlan,
    /// Scaling fit on the training part of each fold.
    pub scalings: Vec<ScalingParams>,
    pub balanced: bool,
    pub svm: TrainConfig,
}

impl FitnessContext {
    pub fn new(data: Vec<FeatureVector>, folds: FoldPlan, balanced: bool, svm: TrainConfig) -> Result<Self, PipelineError> {
        if data.len() != folds.assignment.len() {
            return Err(PipelineError::InvalidData(format!(
                "{} beats but {} fold assignments",
                data.len(),
                folds.assignment.len()
            )));
        }
        let mut scalings = Vec::with_capacity(folds.n_folds);
        for k in 0..folds.n_folds {
            let train_idx = folds.training(k);
            if train_idx.is_empty() || folds.validation(k).is_empty() {
                return Err(PipelineError::InsufficientData(data.len()));
            }
            let s = fit_scaling(train_idx.iter().map(|&i| &data[i]))
                .map_err(|_| PipelineError::InsufficientData(data.len()))?;
            scalings.push(s);
        }
        Ok(Self {
            data,
            folds,
            scalings,
            balanced,
            svm,
        })
    }

    fn fold_model(&self, k: usize, train_idx: &[usize], params: &Decoded, kernel: KernelParams) -> Result<SvmModel, SvmError> {
        let x: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| self.scalings[k].apply_masked(&self.data[i], &params.mask))
            .collect();
        let y: Vec<BinaryLabel> = train_idx.iter().map(|&i| self.data[i].label).collect();
        let cfg = TrainConfig {
            penalty: params.penalty,
            ..self.svm
        };
        match train(&x, &y, &cfg, kernel) {
            Ok(out) => Ok(out.model),
            Err(SvmError::DegenerateLabels) => Ok(SvmModel::constant(y[0], params.n_features(), kernel, params.penalty)),
            Err(e) => Err(e),
        }
    }

    /// Train on all but one fold, score the held-out fold, for every fold.
    pub fn evaluate(&self, params: &Decoded) -> FoldEvaluation {
        let n = self.data.len();
        let mut predictions = vec![BinaryLabel::Normal; n];
        let mut fold_accuracies = Vec::with_capacity(self.folds.n_folds);
        let mut failed = false;
        let kernel = KernelParams::new(params.gamma);
        for k in 0..self.folds.n_folds {
            let train_idx = self.folds.training(k);
            let valid_idx = self.folds.validation(k);
            assert!(
                train_idx.iter().all(|&i| self.folds.assignment[i] != k),
                "validation beat leaked into training fold {k}"
            );
            let model = kernel.clone().and_then(|kp| self.fold_model(k, &train_idx, params, kp));
            let model = match model {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("fold {k} failed to train ({e}); fitness set to 0");
                    failed = true;
                    fold_accuracies.push(0.0);
                    continue;
                }
            };
            let mut per_class = [(0usize, 0usize); 2];
            for &i in &valid_idx {
                let x = self.scalings[k].apply_masked(&self.data[i], &params.mask);
                let (_, label) = model.decide(&x).expect("dimension matches mask");
                predictions[i] = label;
                let c = &mut per_class[usize::from(self.data[i].label == BinaryLabel::Abnormal)];
                c.1 += 1;
                if label == self.data[i].label {
                    c.0 += 1;
                }
            }
            let acc = if self.balanced {
                let recalls: Vec<f64> = per_class
                    .iter()
                    .filter(|c| c.1 > 0)
                    .map(|c| c.0 as f64 / c.1 as f64)
                    .collect();
                fold_mean(&recalls)
            } else {
                let correct: usize = per_class.iter().map(|c| c.0).sum();
                correct as f64 / valid_idx.len() as f64
            };
            fold_accuracies.push(acc);
        }
        FoldEvaluation {
            fitness: if failed { 0.0 } else { fold_mean(&fold_accuracies) },
            fold_accuracies,
            predictions,
            failed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::N_FEATURES;
    use crate::record::BeatSymbol;

    fn beat(v: f64, symbol: BeatSymbol) -> FeatureVector {
        let mut values = [0.0; N_FEATURES];
        values[0] = v;
        values[1] = (v * 7.0).sin();
        FeatureVector {
            values,
            present: [true; N_FEATURES],
            label: symbol.label().unwrap(),
            symbol,
        }
    }

    fn params(penalty: f64, gamma: f64) -> Decoded {
        let mut mask = [false; N_FEATURES];
        mask[0] = true;
        mask[1] = true;
        Decoded { penalty, gamma, mask }
    }

    #[test]
    fn mean_of_folds() {
        assert!((fold_mean(&[0.9, 0.8, 1.0]) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn majority_predictor_on_imbalanced_data() {
        // abnormal beats indistinguishable from normal ones: huge gamma
        // leaves only the bias, which follows the majority
        let mut data: Vec<_> = (0..90).map(|i| beat(i as f64 / 90.0, BeatSymbol::Normal)).collect();
        data.extend((0..10).map(|i| beat(i as f64 / 10.0 + 0.005, BeatSymbol::Pvc)));
        let labels: Vec<_> = data.iter().map(|d| d.label).collect();
        let folds = FoldPlan::stratified(&labels, 3, 1);
        let ctx = FitnessContext::new(data, folds, false, TrainConfig::new(1.0)).unwrap();
        let e = ctx.evaluate(&params(1.0, 1000.0));
        assert!((e.fitness - 0.9).abs() < 0.02, "{e:?}");
        assert_eq!(e.fitness, fold_mean(&e.fold_accuracies));
        let balanced = FitnessContext { balanced: true, ..ctx.clone() }.evaluate(&params(1.0, 1000.0));
        assert!((balanced.fitness - 0.5).abs() < 0.05, "{balanced:?}");
    }

    #[test]
    fn separable_and_repeatable() {
        let data: Vec<_> = (0..60)
            .map(|i| {
                let s = if i % 2 == 0 { BeatSymbol::Normal } else { BeatSymbol::Pvc };
                beat(if i % 2 == 0 { 1.0 } else { -1.0 } + i as f64 * 1e-3, s)
            })
            .collect();
        let labels: Vec<_> = data.iter().map(|d| d.label).collect();
        let ctx = FitnessContext::new(data, FoldPlan::stratified(&labels, 3, 4), false, TrainConfig::new(1.0)).unwrap();
        let a = ctx.evaluate(&params(10.0, 1.0));
        assert_eq!(a.fitness, 1.0);
        assert_eq!(ctx.evaluate(&params(10.0, 1.0)), a);
    }

    #[test]
    fn single_class_training_folds_predict_constant() {
        let data: Vec<_> = (0..9).map(|i| beat(i as f64, BeatSymbol::Normal)).collect();
        let labels: Vec<_> = data.iter().map(|d| d.label).collect();
        let ctx = FitnessContext::new(data, FoldPlan::stratified(&labels, 3, 0), false, TrainConfig::new(1.0)).unwrap();
        assert_eq!(ctx.evaluate(&params(5.0, 2.0)).fitness, 1.0);
    }

    #[test]
    fn too_few_beats() {
        let data = vec![beat(0.0, BeatSymbol::Normal), beat(1.0, BeatSymbol::Normal)];
        let folds = FoldPlan::stratified(&[BinaryLabel::Normal; 2], 3, 0);
        assert!(FitnessContext::new(data, folds, false, TrainConfig::new(1.0)).is_err());
    }
}
