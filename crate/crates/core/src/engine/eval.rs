use ndarray::Axis;

use crate::data::LabeledDataset;
use crate::error::Result;
use crate::nn::{argmax, Mlp};
use crate::scalar::Scalar;

/// Rows per forward pass during evaluation.
pub const EVAL_CHUNK: usize = 1024;

/// Top-1 accuracy of `model` on the selected rows of `dataset`.
pub fn accuracy_on<T: Scalar>(
    model: &Mlp<T>,
    dataset: &LabeledDataset<T>,
    indices: &[usize],
) -> Result<f64> {
    if indices.is_empty() {
        return Err(crate::error::Error::Contract("evaluation set is empty".into()));
    }
    let mut correct = 0usize;
    for chunk in indices.chunks(EVAL_CHUNK) {
        let x = dataset.features().select(Axis(0), chunk);
        let logits = model.forward(x.view())?;
        correct += logits
            .rows()
            .into_iter()
            .zip(chunk)
            .filter(|(row, &i)| argmax(row.as_slice().expect("contiguous")) == dataset.labels()[i])
            .count();
    }
    Ok(correct as f64 / indices.len() as f64)
}
