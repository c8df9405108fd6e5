use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which probabilities were fused with the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeacherKind {
    /// Stored outputs from the client's previous participation (first epoch).
    History,
    /// Outputs of the previous local epoch.
    PreviousEpoch,
}

/// `H = alpha P + (1 - alpha) Y`
#[derive(Debug, Clone, PartialEq)]
pub struct FusionLabel<T> {
    pub h: Vec<T>,
    pub alpha: T,
    pub source: TeacherKind,
}

/// Fuses a probability vector with a one-hot label vector.
pub fn fuse_labels<T: Scalar>(
    p: &[T],
    y: &[T],
    alpha: T,
    source: TeacherKind,
) -> Result<FusionLabel<T>> {
    if p.len() != y.len() {
        return Err(Error::shape("fuse_labels", p.len(), y.len()));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::Contract(format!("fusion weight {alpha} outside [0, 1]")));
    }
    let keep = T::one() - alpha;
    let h = p.iter().zip(y).map(|(&pi, &yi)| alpha * pi + keep * yi).collect();
    Ok(FusionLabel { h, alpha, source })
}

/// [`fuse_labels`] with the one-hot vector given by its class index, written
/// into `out`. This is the per-sample hot path of local training.
pub fn fuse_with_label<T: Scalar>(p: &[T], label: usize, alpha: T, out: &mut [T]) {
    let keep = T::one() - alpha;
    for (j, (dst, &pj)) in out.iter_mut().zip(p).enumerate() {
        let yj = if j == label { T::one() } else { T::zero() };
        *dst = alpha * pj + keep * yj;
    }
}
