//! Desk-scale classifiers, the CLAM training loop and baseline loops.

mod model;
mod train;

pub use model::{Architecture, BatchEval, ClassifierParams, Dense, DEFAULT_HIDDEN};
pub use train::{train_baseline, train_clam, train_method, EpochRecord, TrainConfig, TrainResult};

use serde::{Deserialize, Serialize};

use crate::accuracy::ClassAccuracyVector;
use crate::data::Dataset;
use crate::error::{check_len, Error, Result};
use crate::losses::SampleLoss;
use crate::scalar::Scalar;
use crate::simplex::WeightVector;

/// Per-class mean losses with a flag for classes missing from the batch
/// (their loss is reported as zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ClassLosses<F> {
    pub losses: Vec<F>,
    pub absent: Vec<bool>,
}

pub fn per_class_batch_loss<F: Scalar>(probs: &[F], labels: &[usize], n: usize, base: &SampleLoss<F>) -> Result<ClassLosses<F>> {
    check_len(labels.len() * n, probs.len())?;
    let mut sum = vec![F::zero(); n];
    let mut count = vec![0usize; n];
    for (row, &y) in probs.chunks(n.max(1)).zip(labels) {
        if y >= n {
            return Err(Error::InvalidInput(format!("label {y} out of range for {n} classes")));
        }
        sum[y] += base.value(row[y])?;
        count[y] += 1;
    }
    let losses = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c == 0 { F::zero() } else { s / F::from_usize_lossy(c) })
        .collect();
    Ok(ClassLosses { losses, absent: count.iter().map(|&c| c == 0).collect() })
}

/// `sum_i (n w_i) L_i`, the class-weighted loss with weights rescaled to sum
/// to `n`.
pub fn weighted_loss<F: Scalar>(class_losses: &[F], w: &WeightVector<F>) -> Result<F> {
    check_len(w.len(), class_losses.len())?;
    let n = F::from_usize_lossy(w.len());
    Ok(w.as_slice().iter().zip(class_losses).map(|(&wi, &li)| n * wi * li).sum())
}

/// Per-class accuracies; classes without samples get accuracy one and an
/// `empty` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ClassAccuracies<F> {
    pub acc: ClassAccuracyVector<F>,
    pub empty: Vec<bool>,
}

pub(crate) fn accuracies_from_counts<F: Scalar>(correct: &[usize], count: &[usize]) -> Result<ClassAccuracies<F>> {
    let v = correct
        .iter()
        .zip(count)
        .map(|(&c, &m)| if m == 0 { F::one() } else { F::from_usize_lossy(c) / F::from_usize_lossy(m) })
        .collect();
    Ok(ClassAccuracies { acc: ClassAccuracyVector::new(v)?, empty: count.iter().map(|&m| m == 0).collect() })
}

pub fn class_accuracies<F: Scalar>(params: &ClassifierParams<F>, data: &Dataset<F>) -> Result<ClassAccuracies<F>> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    check_len(params.n_classes(), data.n_classes())?;
    let pred = params.predict(data.features())?;
    let n = data.n_classes();
    let (mut correct, mut count) = (vec![0; n], vec![0; n]);
    for (&p, &y) in pred.iter().zip(data.labels()) {
        count[y] += 1;
        if p == y {
            correct[y] += 1;
        }
    }
    accuracies_from_counts(&correct, &count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SampleShape, Split};

    #[test]
    fn batch_loss_examples() {
        let probs = [0.5_f64, 0.5, 1.0, 0.0];
        let l = per_class_batch_loss(&probs, &[0, 0], 2, &SampleLoss::CrossEntropy).unwrap();
        assert!((l.losses[0] - 0.34657).abs() < 1e-5);
        assert_eq!(l.losses[1], 0.0);
        assert_eq!(l.absent, vec![false, true]);
        let perfect = per_class_batch_loss(&[1.0, 0.0, 0.0, 1.0], &[0, 1], 2, &SampleLoss::CrossEntropy).unwrap();
        assert_eq!(perfect.losses, vec![0.0, 0.0]);
        assert!(per_class_batch_loss(&[0.5, 0.5], &[2], 2, &SampleLoss::CrossEntropy).is_err());
    }

    #[test]
    fn weighted_loss_examples() {
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(weighted_loss(&[1.0, 2.0], &w).unwrap(), 3.5);
        let u = WeightVector::<f64>::uniform(4);
        assert!((weighted_loss(&[1.0, 2.0, 3.0, 4.0], &u).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(weighted_loss(&[0.0, 0.0], &w).unwrap(), 0.0);
        assert!(weighted_loss(&[1.0], &w).is_err());
    }

    #[test]
    fn constant_predictor_accuracies() {
        // zero weights with a bias favoring class 0
        let mut p = ClassifierParams::<f64>::zeros(Architecture::Softmax, 1, 2).unwrap();
        p.layers[0].b[0] = 1.0;
        let data = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], vec![0, 0, 1, 1], 2, SampleShape::Flat { dim: 1 }, Split::Train).unwrap();
        let a = class_accuracies(&p, &data).unwrap();
        assert_eq!(a.acc.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn counting_oracle() {
        let a = accuracies_from_counts::<f64>(&[7, 9, 10, 0], &[10, 10, 10, 0]).unwrap();
        assert_eq!(a.acc.as_slice(), &[0.7, 0.9, 1.0, 1.0]);
        assert_eq!(a.empty, vec![false, false, false, true]);
    }
}
