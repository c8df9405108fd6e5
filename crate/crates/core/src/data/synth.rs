use ndarray::Array2;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{self, purpose};
use crate::scalar::Scalar;

/// Gaussian blobs: `per_class` samples around each of `classes` random unit
/// vectors in `dim` dimensions, with isotropic standard deviation `spread`.
///
/// Rows are grouped by class (class 0 first). The class means depend only on
/// `(classes, dim, seed)`.
pub fn synth_generate<T: Scalar>(
    classes: usize,
    dim: usize,
    per_class: usize,
    seed: u64,
    spread: f64,
) -> Result<LabeledDataset<T>> {
    if classes < 2 || dim < 2 || per_class < 1 {
        return Err(Error::Contract(format!(
            "synthetic data needs classes >= 2, dim >= 2, per_class >= 1 (got {classes}, {dim}, {per_class})"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Contract(format!("spread must be non-negative, got {spread}")));
    }
    let mut mean_rng = rng::stream(seed, &[purpose::SYNTHETIC, 0]);
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut mean_rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let mut noise_rng = rng::stream(seed, &[purpose::SYNTHETIC, 1]);
    let noise = Normal::new(0.0, spread.max(f64::MIN_POSITIVE)).expect("valid deviation");
    let rows = classes * per_class;
    let mut features = Array2::zeros((rows, dim));
    let mut labels = Vec::with_capacity(rows);
    for (c, mean) in means.iter().enumerate() {
        for k in 0..per_class {
            let mut row = features.row_mut(c * per_class + k);
            for (dst, &mu) in row.iter_mut().zip(mean) {
                let eps = if spread == 0.0 { 0.0 } else { noise.sample(&mut noise_rng) };
                *dst = T::of(mu + eps);
            }
            labels.push(c);
        }
    }
    LabeledDataset::new(features, labels, classes)
}

/// Train/test pair drawn from the same class means; the first
/// `train_per_class` samples of each class go to the training set.
pub fn synth_train_test<T: Scalar>(
    classes: usize,
    dim: usize,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
    spread: f64,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    if test_per_class == 0 {
        return Err(Error::Contract("test_per_class must be positive".into()));
    }
    let per_class = train_per_class + test_per_class;
    let all = synth_generate::<T>(classes, dim, per_class, seed, spread)?;
    let mut train_idx = Vec::with_capacity(classes * train_per_class);
    let mut test_idx = Vec::with_capacity(classes * test_per_class);
    for c in 0..classes {
        let start = c * per_class;
        train_idx.extend(start..start + train_per_class);
        test_idx.extend(start + train_per_class..start + per_class);
    }
    let (xtr, ytr) = all.gather(&train_idx);
    let (xte, yte) = all.gather(&test_idx);
    Ok((
        LabeledDataset::new(xtr, ytr, classes)?,
        LabeledDataset::new(xte, yte, classes)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{cross_entropy, top1_accuracy, Mlp, OptimizerState};

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = synth_generate::<f64>(2, 2, 5, 7, 0.3).unwrap();
        let b = synth_generate::<f64>(2, 2, 5, 7, 0.3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_generate::<f64>(2, 2, 5, 8, 0.3).unwrap());
    }

    #[test]
    fn zero_spread_collapses_to_means() {
        let ds = synth_generate::<f64>(3, 4, 6, 1, 0.0).unwrap();
        for c in 0..3 {
            let first = ds.features().row(c * 6).to_owned();
            let norm: f64 = first.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            for k in 1..6 {
                assert_eq!(ds.features().row(c * 6 + k), first);
            }
        }
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(synth_generate::<f64>(1, 4, 5, 0, 0.1).is_err());
        assert!(synth_generate::<f64>(3, 1, 5, 0, 0.1).is_err());
        assert!(synth_generate::<f64>(3, 4, 0, 0, 0.1).is_err());
    }

    #[test]
    fn train_test_share_means() {
        let (train, test) = synth_train_test::<f64>(3, 4, 5, 2, 9, 0.0).unwrap();
        assert_eq!(train.len(), 15);
        assert_eq!(test.len(), 6);
        assert_eq!(train.features().row(0), test.features().row(0));
    }

    #[test]
    fn linear_probe_separates_classes() {
        let ds = synth_generate::<f64>(4, 8, 100, 3, 0.1).unwrap();
        let mut model = Mlp::<f64>::init(&[8, 4], &mut crate::rng::stream(0, &[])).unwrap();
        let mut opt = OptimizerState::new(&model, 0.1, 0.9, 0.0).unwrap();
        let x = ds.features();
        let n = ds.len() as f64;
        for _ in 0..200 {
            let cache = model.forward_cached(x.view()).unwrap();
            let mut grad = Array2::zeros(cache.logits().dim());
            for (i, &y) in ds.labels().iter().enumerate() {
                let (_, g) = cross_entropy(&cache.logits().row(i).to_vec(), y);
                for (j, gj) in g.into_iter().enumerate() {
                    grad[[i, j]] = gj / n;
                }
            }
            let grads = model.backprop(&cache, grad.view()).unwrap();
            opt.step(&mut model, &grads).unwrap();
        }
        let acc = top1_accuracy(model.forward(x.view()).unwrap().view(), ds.labels()).unwrap();
        assert!(acc >= 0.99, "{acc}");
    }
}
