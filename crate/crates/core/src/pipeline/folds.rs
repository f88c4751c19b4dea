//! Stratified k-fold assignment.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::record::BinaryLabel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// Fold of every beat.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Shuffle each class with `seed` and deal its beats round-robin, so
    /// every fold holds a near-equal share of both classes.
    pub fn stratified(labels: &[BinaryLabel], n_folds: usize, seed: u64) -> Self {
        assert!(n_folds >= 2, "need at least two folds");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignment = vec![0; labels.len()];
        let mut next = 0;
        for class in [BinaryLabel::Normal, BinaryLabel::Abnormal] {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            idx.shuffle(&mut rng);
            for i in idx {
                assignment[i] = next % n_folds;
                next += 1;
            }
        }
        Self { n_folds, assignment }
    }

    pub fn validation(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// The assignment as a digit string, one digit per beat.
impl fmt::Display for FoldPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.assignment {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use BinaryLabel::{Abnormal, Normal};

    #[test]
    fn both_classes_in_every_fold() {
        let mut labels = vec![Normal; 90];
        labels.extend(vec![Abnormal; 10]);
        let plan = FoldPlan::stratified(&labels, 3, 7);
        for k in 0..3 {
            let v = plan.validation(k);
            assert!(v.iter().any(|&i| labels[i] == Normal));
            assert!(v.iter().any(|&i| labels[i] == Abnormal));
            assert!((33..=34).contains(&v.len()));
        }
        assert_eq!(plan, FoldPlan::stratified(&labels, 3, 7));
        assert_ne!(plan, FoldPlan::stratified(&labels, 3, 8));
    }

    proptest! {
        #[test]
        fn folds_partition(labels in prop::collection::vec(prop::bool::ANY, 3..200), seed in any::<u64>()) {
            let labels: Vec<_> = labels.into_iter().map(|b| if b { Normal } else { Abnormal }).collect();
            let plan = FoldPlan::stratified(&labels, 3, seed);
            let mut seen = vec![0; labels.len()];
            for k in 0..3 {
                let t = plan.training(k);
                let v = plan.validation(k);
                prop_assert_eq!(t.len() + v.len(), labels.len());
                prop_assert!(v.iter().all(|i| !t.contains(i)));
                for i in v {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|c| *c == 1));
        }
    }
}
