//! Per-class accuracy vectors, the payoff the min player observes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Accuracy of a model on each class, every component in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ClassAccuracyVector<F> {
    v: Vec<F>,
}

impl<F: Scalar> ClassAccuracyVector<F> {
    pub fn new(v: Vec<F>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidInput("empty accuracy vector".into()));
        }
        if let Some((i, x)) = v
            .iter()
            .enumerate()
            .find(|(_, x)| !(**x >= F::zero() && **x <= F::one()))
        {
            return Err(Error::InvalidInput(format!(
                "accuracy component {i} = {x} outside [0, 1]"
            )));
        }
        Ok(Self { v })
    }

    pub fn as_slice(&self) -> &[F] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn into_vec(self) -> Vec<F> {
        self.v
    }

    pub fn mean(&self) -> F {
        self.v.iter().copied().sum::<F>() / F::from_usize_lossy(self.v.len())
    }
}

impl<F> std::ops::Index<usize> for ClassAccuracyVector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.v[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(ClassAccuracyVector::new(vec![0.5, 1.2]).is_err());
        assert!(ClassAccuracyVector::new(vec![0.5, f64::NAN]).is_err());
        assert!(ClassAccuracyVector::<f64>::new(vec![]).is_err());
        assert!(ClassAccuracyVector::new(vec![0.0, 1.0]).is_ok());
    }
}
