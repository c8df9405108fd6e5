use crate::error::{Error, Result};
use crate::nn::{kl_divergence, softmax};
use crate::scalar::Scalar;

/// `KL(teacher || softmax(student_logits))` and its gradient with respect to
/// the student logits, `softmax(student_logits) - teacher`.
///
/// Both sides use the plain softmax; prior calibration applies to the
/// cross-entropy term only.
pub fn psd_kd_loss<T: Scalar>(teacher: &[T], student_logits: &[T]) -> Result<(T, Vec<T>)> {
    if teacher.len() != student_logits.len() {
        return Err(Error::shape("psd_kd_loss", teacher.len(), student_logits.len()));
    }
    let p = softmax(student_logits);
    let loss = kl_divergence(teacher, &p)?;
    let grad = p.iter().zip(teacher).map(|(&pi, &hi)| pi - hi).collect();
    Ok((loss, grad))
}
