use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to predicted probabilities inside [`kl_divergence`].
pub const KL_EPSILON: f64 = 1e-12;

fn log_sum_exp<T: Scalar>(logits: &[T]) -> T {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = logits.iter().map(|&z| (z - max).exp()).sum();
    max + sum.ln()
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = out.iter().copied().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&z| z - lse).collect()
}

/// Row-wise softmax of a `B x L` logit matrix.
pub fn softmax_rows<T: Scalar>(logits: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let probs = softmax(row.as_slice().expect("owned rows are contiguous"));
        row.iter_mut().zip(probs).for_each(|(dst, p)| *dst = p);
    }
    out
}

pub fn one_hot<T: Scalar>(label: usize, classes: usize) -> Vec<T> {
    let mut y = vec![T::zero(); classes];
    y[label] = T::one();
    y
}

/// Entries non-negative and summing to one within `tol`.
pub fn is_probability_vector<T: Scalar>(v: &[T], tol: f64) -> bool {
    !v.is_empty()
        && v.iter().all(|&x| x >= T::zero() && x.is_finite())
        && (v.iter().copied().sum::<T>().as_f64() - 1.0).abs() <= tol
}

/// `KL(target || pred) = sum_i t_i ln(t_i / p_i)`.
///
/// Terms with `t_i = 0` contribute nothing; `p_i` is floored at [`KL_EPSILON`].
pub fn kl_divergence<T: Scalar>(target: &[T], pred: &[T]) -> Result<T> {
    if target.len() != pred.len() {
        return Err(Error::shape("kl_divergence", target.len(), pred.len()));
    }
    for (name, v) in [("target", target), ("pred", pred)] {
        if !is_probability_vector(v, 1e-9) {
            return Err(Error::Contract(format!(
                "kl_divergence {name} is not a probability vector"
            )));
        }
    }
    let eps = T::of(KL_EPSILON);
    let kl: T = target
        .iter()
        .zip(pred)
        .filter(|(&t, _)| t > T::zero())
        .map(|(&t, &p)| t * (t.ln() - p.max(eps).ln()))
        .sum();
    // rounding can leave a tiny negative residue for identical inputs
    Ok(kl.max(T::zero()))
}

/// Softmax cross-entropy of one sample and its gradient with respect to the logits.
pub fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    let lse = log_sum_exp(logits);
    let loss = lse - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= T::one();
    (loss, grad)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of rows whose argmax equals the label.
pub fn top1_accuracy<T: Scalar>(logits: ArrayView2<'_, T>, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Contract("top1_accuracy needs at least one sample".into()));
    }
    if logits.nrows() != labels.len() {
        return Err(Error::shape("top1_accuracy rows", labels.len(), logits.nrows()));
    }
    let correct = logits
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &y)| argmax(&row.to_vec()) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0f64, 0.0]), vec![0.5, 0.5]);
        for c in [-30.0, 0.0, 7.5, 400.0] {
            for p in softmax(&[c; 4]) {
                assert!((p - 0.25f64).abs() < 1e-15);
            }
        }
        let p = softmax(&[1.0f64.ln(), 3.0f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.5f64, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        let a = kl_divergence(&[1.0f64, 0.0], &[0.5, 0.5]).unwrap();
        assert!((a - 2.0f64.ln()).abs() < 1e-15);
        let b = kl_divergence(&[0.8f64, 0.2], &[0.5, 0.5]).unwrap();
        let expected = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 0.19274).abs() < 1e-5);
    }

    #[test]
    fn kl_clamps_zero_prediction() {
        let kl = kl_divergence(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap();
        assert!((kl - (-(1e-12f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn kl_rejects_non_distributions() {
        assert!(kl_divergence(&[0.7f64, 0.7], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[1.0f64], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(top1_accuracy(array![[2.0, 1.0], [0.0, 3.0]].view(), &[0, 1]).unwrap(), 1.0);
        assert_eq!(top1_accuracy(array![[2.0, 1.0], [3.0, 0.0]].view(), &[1, 1]).unwrap(), 0.0);
        assert_eq!(top1_accuracy(array![[1.0, 1.0]].view(), &[0]).unwrap(), 1.0);
        assert!(top1_accuracy(Array2::<f64>::zeros((0, 2)).view(), &[]).is_err());
    }

    #[test]
    fn cross_entropy_gradient_is_softmax_minus_onehot() {
        let (loss, grad) = cross_entropy(&[0.0f64, 0.0], 1);
        assert!((loss - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(grad, vec![0.5, -0.5]);
    }

    fn logits_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-50.0f64..50.0, 2..12)
    }

    fn distribution(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn softmax_normalised_and_shift_invariant(logits in logits_strategy(), shift in -100.0f64..100.0) {
            let p = softmax(&logits);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            for (a, b) in p.iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn kl_is_non_negative_and_zero_on_self(
            raw in proptest::collection::vec((0.01f64..1.0, 0.01f64..1.0), 2..10)
        ) {
            let p = distribution(raw.iter().map(|r| r.0).collect());
            let q = distribution(raw.iter().map(|r| r.1).collect());
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }
    }
}
