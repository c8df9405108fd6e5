//! Central finite-difference gradient checks.

use ndarray::{Array2, ArrayView2};

use crate::nn::Mlp;
use crate::scalar::Scalar;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Largest `|analytic - numeric| / max(1, |numeric|)` over every parameter.
///
/// `objective` returns the scalar loss at the given parameters together with
/// its analytic gradient; the numeric gradient perturbs each parameter by
/// `+-FD_STEP` and re-evaluates only the loss.
pub fn max_gradient_error<T, F>(model: &Mlp<T>, objective: F) -> f64
where
    T: Scalar,
    F: Fn(&Mlp<T>) -> (T, Mlp<T>),
{
    let (_, analytic) = objective(model);
    let analytic = analytic.flatten();
    let base = model.flatten();
    let step = T::of(FD_STEP);
    let mut worst = 0.0f64;
    let mut probe = base.clone();
    for i in 0..base.len() {
        probe[i] = base[i] + step;
        let plus = objective(&model.with_flat(&probe).expect("same length")).0;
        probe[i] = base[i] - step;
        let minus = objective(&model.with_flat(&probe).expect("same length")).0;
        probe[i] = base[i];
        let numeric = (plus - minus).as_f64() / (2.0 * FD_STEP);
        let err = (analytic[i].as_f64() - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

/// Gradient check for a loss defined over the logits of `batch`.
///
/// `loss_fn` maps logits to `(loss, dLoss/dLogits)`; the analytic parameter
/// gradient comes from [`Mlp::backprop`].
pub fn finite_diff_check<T, F>(model: &Mlp<T>, batch: ArrayView2<'_, T>, loss_fn: F) -> f64
where
    T: Scalar,
    F: Fn(&Array2<T>) -> (T, Array2<T>),
{
    max_gradient_error(model, |m| {
        let cache = m.forward_cached(batch).expect("batch matches model");
        let (loss, d_logits) = loss_fn(cache.logits());
        let grads = m.backprop(&cache, d_logits.view()).expect("shapes match");
        (loss, grads)
    })
}
