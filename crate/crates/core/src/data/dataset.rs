use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Labelled samples: one feature row per label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    features: Array2<T>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(features: Array2<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Contract("a dataset needs at least one sample".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::shape("dataset rows", labels.len(), features.nrows()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Contract(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(LabeledDataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Per-class sample counts over the given indices.
    pub fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Features and labels of the selected rows, in the given order.
    pub fn gather(&self, indices: &[usize]) -> (Array2<T>, Vec<usize>) {
        (
            self.features.select(Axis(0), indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Indices of each class, ascending.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        by_class
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_labels_and_shapes() {
        assert!(LabeledDataset::new(array![[0.0f64]], vec![2], 2).is_err());
        assert!(LabeledDataset::new(array![[0.0f64], [1.0]], vec![0], 2).is_err());
        assert!(LabeledDataset::new(Array2::<f64>::zeros((0, 1)), vec![], 2).is_err());
    }

    #[test]
    fn gather_and_counts() {
        let ds = LabeledDataset::new(array![[0.0f64], [1.0], [2.0]], vec![1, 0, 1], 2).unwrap();
        assert_eq!(ds.class_counts(&[0, 2]), vec![0, 2]);
        let (x, y) = ds.gather(&[2, 1]);
        assert_eq!(x, array![[2.0], [1.0]]);
        assert_eq!(y, vec![1, 0]);
        assert_eq!(ds.indices_by_class(), vec![vec![1], vec![0, 2]]);
    }
}
