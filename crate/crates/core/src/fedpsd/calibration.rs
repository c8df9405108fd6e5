use crate::data::ClassPrior;
use crate::error::{Error, Result};
use crate::nn::{argmax, cross_entropy};
use crate::scalar::Scalar;

fn check_prior<T: Scalar>(logits: &[T], prior: &ClassPrior<T>) -> Result<()> {
    if prior.num_classes() != logits.len() {
        return Err(Error::shape("class prior", logits.len(), prior.num_classes()));
    }
    if prior.probabilities().iter().any(|&p| p.is_nan() || p <= T::zero()) {
        return Err(Error::Contract(
            "calibration needs a strictly positive (smoothed) class prior".into(),
        ));
    }
    Ok(())
}

/// Cross-entropy under the calibrated probabilities
/// `P(y) e^{f_y} / sum_y' P(y') e^{f_y'}`, i.e. softmax cross-entropy of the
/// shifted logits `f + ln P`.
///
/// Returns the loss and its gradient `softmax(f + ln P) - onehot(y)`.
pub fn calibrated_ce_loss<T: Scalar>(
    logits: &[T],
    label: usize,
    prior: &ClassPrior<T>,
) -> Result<(T, Vec<T>)> {
    check_prior(logits, prior)?;
    if label >= logits.len() {
        return Err(Error::Contract(format!("label {label} out of range")));
    }
    let shifted: Vec<T> = logits
        .iter()
        .zip(prior.log_probabilities())
        .map(|(&f, &lp)| f + lp)
        .collect();
    Ok(cross_entropy(&shifted, label))
}

/// Prior-free prediction `argmax_y (f_y - ln P(y))`; ties go to the lowest class.
pub fn balanced_prediction<T: Scalar>(logits: &[T], prior: &ClassPrior<T>) -> Result<usize> {
    check_prior(logits, prior)?;
    let adjusted: Vec<T> = logits
        .iter()
        .zip(prior.log_probabilities())
        .map(|(&f, &lp)| f - lp)
        .collect();
    Ok(argmax(&adjusted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::class_prior;
    use crate::nn::softmax;
    use proptest::prelude::*;

    #[test]
    fn skewed_prior_example() {
        let prior = ClassPrior::from_probabilities(vec![0.75f64, 0.25]).unwrap();
        let (loss, grad) = calibrated_ce_loss(&[0.0, 0.0], 0, &prior).unwrap();
        assert!((loss + 0.75f64.ln()).abs() < 1e-15);
        assert!((loss - 0.2877).abs() < 1e-4);
        assert!((grad[0] + 0.25).abs() < 1e-15 && (grad[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn balanced_prediction_example() {
        let prior = ClassPrior::from_probabilities(vec![0.1f64, 0.9]).unwrap();
        assert_eq!(balanced_prediction(&[2.0, 1.0], &prior).unwrap(), 0);
        // 2 - ln 0.1 = 4.303, 1 - ln 0.9 = 1.105
        let shifted: Vec<f64> = [2.0f64 - 0.1f64.ln(), 1.0 - 0.9f64.ln()].to_vec();
        assert!((shifted[0] - 4.303).abs() < 1e-3 && (shifted[1] - 1.105).abs() < 1e-3);
    }

    #[test]
    fn zero_prior_entry_is_rejected() {
        let prior = class_prior::<f64>(&[3, 0], 0.0).unwrap();
        assert!(calibrated_ce_loss(&[0.0, 0.0], 0, &prior).is_err());
        assert!(balanced_prediction(&[0.0, 0.0], &prior).is_err());
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let prior = ClassPrior::from_probabilities(vec![0.6f64, 0.3, 0.1]).unwrap();
        let logits = [0.4f64, -1.2, 2.0];
        let (_, grad) = calibrated_ce_loss(&logits, 1, &prior).unwrap();
        for j in 0..3 {
            let mut plus = logits;
            let mut minus = logits;
            plus[j] += 1e-5;
            minus[j] -= 1e-5;
            let num = (calibrated_ce_loss(&plus, 1, &prior).unwrap().0
                - calibrated_ce_loss(&minus, 1, &prior).unwrap().0)
                / 2e-5;
            assert!((num - grad[j]).abs() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn uniform_prior_reduces_to_plain_ce(
            logits in proptest::collection::vec(-20.0f64..20.0, 2..12),
            label_seed in 0usize..100,
        ) {
            let label = label_seed % logits.len();
            let prior = ClassPrior::uniform(logits.len());
            let (a, ga) = calibrated_ce_loss(&logits, label, &prior).unwrap();
            let (b, gb) = cross_entropy(&logits, label);
            prop_assert!((a - b).abs() <= 1e-12);
            for (x, y) in ga.iter().zip(&gb) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn balanced_prediction_matches_prior_ratio(
            logits in proptest::collection::vec(-10.0f64..10.0, 2..10),
            raw in proptest::collection::vec(0.01f64..1.0, 10),
        ) {
            let raw = &raw[..logits.len()];
            let s: f64 = raw.iter().sum();
            let prior = ClassPrior::from_probabilities(raw.iter().map(|x| x / s).collect()).unwrap();
            let ratio: Vec<f64> = softmax(&logits)
                .iter()
                .zip(prior.probabilities())
                .map(|(p, q)| p / q)
                .collect();
            prop_assert_eq!(balanced_prediction(&logits, &prior).unwrap(), argmax(&ratio));
        }
    }
}
