use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Add-one smoothing keeps `ln P(y)` finite for classes a client never sees.
pub const DEFAULT_PRIOR_EPSILON: f64 = 1.0;

/// A client's smoothed label distribution `P(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrior<T> {
    probabilities: Vec<T>,
    log_probabilities: Vec<T>,
    epsilon: f64,
}

impl<T: Scalar> ClassPrior<T> {
    /// Builds a prior from explicit probabilities, which must be strictly
    /// positive and normalised.
    pub fn from_probabilities(probabilities: Vec<T>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.iter().any(|&p| p.is_nan() || p <= T::zero()) {
            return Err(Error::Contract(
                "class prior entries must be strictly positive".into(),
            ));
        }
        let sum: f64 = probabilities.iter().map(|p| p.as_f64()).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("class prior sums to {sum}, not 1")));
        }
        let log_probabilities = probabilities.iter().map(|p| p.ln()).collect();
        Ok(ClassPrior {
            probabilities,
            log_probabilities,
            epsilon: 0.0,
        })
    }

    pub fn uniform(classes: usize) -> Self {
        let p = T::one() / T::of_usize(classes);
        ClassPrior {
            probabilities: vec![p; classes],
            log_probabilities: vec![p.ln(); classes],
            epsilon: 0.0,
        }
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn log_probabilities(&self) -> &[T] {
        &self.log_probabilities
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn num_classes(&self) -> usize {
        self.probabilities.len()
    }
}

/// `P(y) = (count_y + eps) / (n_k + L eps)`.
///
/// With `eps = 0` a class absent from the counts gets probability zero, which
/// the calibrated loss rejects; callers training with calibration must smooth.
pub fn class_prior<T: Scalar>(counts: &[usize], epsilon: f64) -> Result<ClassPrior<T>> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::Contract("class prior needs at least one sample".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Contract(format!("prior epsilon must be >= 0, got {epsilon}")));
    }
    let denom = n as f64 + counts.len() as f64 * epsilon;
    let probabilities: Vec<T> = counts
        .iter()
        .map(|&c| T::of((c as f64 + epsilon) / denom))
        .collect();
    let log_probabilities = probabilities.iter().map(|p| p.ln()).collect();
    Ok(ClassPrior {
        probabilities,
        log_probabilities,
        epsilon,
    })
}
