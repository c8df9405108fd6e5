use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use crate::config::Algorithm;
use crate::data::ClassPrior;
use crate::error::{Error, Result};
use crate::fedpsd::calibrated_ce_loss;
use crate::nn::{cross_entropy, Mlp, OptimizerState};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// SGD settings for one client's local run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: T,
    pub momentum: T,
    pub weight_decay: T,
}

/// A client's local training data, gathered into contiguous rows.
#[derive(Debug, Clone, Copy)]
pub struct LocalContext<'a, T> {
    pub round: usize,
    pub client: usize,
    pub features: &'a Array2<T>,
    pub labels: &'a [usize],
    pub num_classes: usize,
}

/// Loss over logits (and optionally parameters) minimised during local training.
pub trait LocalObjective<T: Scalar> {
    /// Called before each epoch; `epoch` is 1-based and `model` is the current
    /// local model.
    fn begin_epoch(&mut self, epoch: usize, model: &Mlp<T>, ctx: &LocalContext<'_, T>) -> Result<()> {
        let _ = (epoch, model, ctx);
        Ok(())
    }

    /// Batch-mean loss and its gradient with respect to `logits` (already
    /// divided by the batch size). `rows` are local sample positions.
    fn batch_loss(
        &mut self,
        epoch: usize,
        rows: &[usize],
        labels: &[usize],
        logits: &Array2<T>,
    ) -> Result<(T, Array2<T>)>;

    /// Extra loss term that depends directly on the parameters.
    fn penalty(&self, model: &Mlp<T>) -> Option<(T, Mlp<T>)> {
        let _ = model;
        None
    }
}

/// Summed per-sample cross-entropy and un-normalised per-row logit gradients.
/// Uses the calibrated loss when a prior is given.
pub fn cross_entropy_rows<T: Scalar>(
    logits: &Array2<T>,
    labels: &[usize],
    prior: Option<&ClassPrior<T>>,
) -> Result<(T, Array2<T>)> {
    let mut grads = Array2::zeros(logits.dim());
    let mut total = T::zero();
    for ((row, mut grad_row), &y) in logits.rows().into_iter().zip(grads.rows_mut()).zip(labels) {
        let row = row.as_slice().expect("contiguous logits");
        let (loss, g) = match prior {
            Some(prior) => calibrated_ce_loss(row, y, prior)?,
            None => cross_entropy(row, y),
        };
        total += loss;
        grad_row.iter_mut().zip(g).for_each(|(dst, v)| *dst = v);
    }
    Ok((total, grads))
}

/// Turns summed loss and per-row gradients into batch means.
pub(crate) fn batch_mean<T: Scalar>(total: T, mut grads: Array2<T>) -> (T, Array2<T>) {
    let b = T::of_usize(grads.nrows());
    grads.mapv_inplace(|g| g / b);
    (total / b, grads)
}

/// Plain softmax cross-entropy (FedAvg).
#[derive(Debug, Default, Clone, Copy)]
pub struct CrossEntropyObjective;

impl<T: Scalar> LocalObjective<T> for CrossEntropyObjective {
    fn batch_loss(
        &mut self,
        _epoch: usize,
        _rows: &[usize],
        labels: &[usize],
        logits: &Array2<T>,
    ) -> Result<(T, Array2<T>)> {
        let (total, grads) = cross_entropy_rows(logits, labels, None)?;
        Ok(batch_mean(total, grads))
    }
}

/// Cross-entropy plus the proximal term `(mu / 2) ||w - w_g||^2` (FedProx).
#[derive(Debug, Clone, Copy)]
pub struct ProxObjective<'a, T> {
    pub global: &'a Mlp<T>,
    pub mu: T,
}

impl<T: Scalar> LocalObjective<T> for ProxObjective<'_, T> {
    fn batch_loss(
        &mut self,
        epoch: usize,
        rows: &[usize],
        labels: &[usize],
        logits: &Array2<T>,
    ) -> Result<(T, Array2<T>)> {
        CrossEntropyObjective.batch_loss(epoch, rows, labels, logits)
    }

    fn penalty(&self, model: &Mlp<T>) -> Option<(T, Mlp<T>)> {
        let half = T::of(0.5);
        let loss = half * self.mu * model.squared_distance(self.global);
        let mut grad = model.clone();
        grad.add_scaled(-T::one(), self.global);
        grad.zip_apply(self.global, |g, _| *g *= self.mu);
        Some((loss, grad))
    }
}

/// Result of one client's local run.
#[derive(Debug, Clone)]
pub struct LocalOutcome<T> {
    pub params: Mlp<T>,
    /// Mean batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch SGD from a copy of `global`.
///
/// The sample order is reshuffled from `rng` at the start of every epoch and
/// momentum buffers start at zero. Any non-finite loss or gradient aborts with
/// the round/client/epoch/batch position.
pub fn train_local<T: Scalar, O: LocalObjective<T>>(
    global: &Mlp<T>,
    ctx: &LocalContext<'_, T>,
    cfg: &LocalTrainConfig<T>,
    objective: &mut O,
    rng: &mut Rng,
) -> Result<LocalOutcome<T>> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::Contract("epochs and batch size must be positive".into()));
    }
    let n = ctx.labels.len();
    if n == 0 || ctx.features.nrows() != n {
        return Err(Error::Contract(format!(
            "client {} has no usable training data",
            ctx.client
        )));
    }
    let mut model = global.clone();
    let mut opt = OptimizerState::new(&model, cfg.learning_rate, cfg.momentum, cfg.weight_decay)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        objective.begin_epoch(epoch, &model, ctx)?;
        order.shuffle(rng);
        let mut epoch_total = 0.0;
        let mut batches = 0usize;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            let non_finite = |what| Error::NonFinite {
                what,
                round: ctx.round,
                client: ctx.client,
                epoch,
                batch,
            };
            let x = ctx.features.select(Axis(0), rows);
            let labels: Vec<usize> = rows.iter().map(|&r| ctx.labels[r]).collect();
            let cache = model.forward_cached(x.view())?;
            let (mut loss, d_logits) = objective.batch_loss(epoch, rows, &labels, cache.logits())?;
            let mut grads = model.backprop(&cache, d_logits.view())?;
            if let Some((extra, extra_grad)) = objective.penalty(&model) {
                loss += extra;
                grads.add_scaled(T::one(), &extra_grad);
            }
            if !loss.is_finite() {
                return Err(non_finite("loss"));
            }
            opt.step(&mut model, &grads).map_err(|_| non_finite("gradient"))?;
            epoch_total += loss.as_f64();
            batches += 1;
        }
        epoch_losses.push(epoch_total / batches as f64);
    }
    Ok(LocalOutcome {
        params: model,
        epoch_losses,
    })
}

/// Local update for the FedAvg / FedProx baselines.
pub fn local_train_baseline<T: Scalar>(
    global: &Mlp<T>,
    ctx: &LocalContext<'_, T>,
    cfg: &LocalTrainConfig<T>,
    algorithm: &Algorithm,
    rng: &mut Rng,
) -> Result<LocalOutcome<T>> {
    match *algorithm {
        Algorithm::FedAvg => train_local(global, ctx, cfg, &mut CrossEntropyObjective, rng),
        Algorithm::FedProx { mu } => {
            let mut objective = ProxObjective {
                global,
                mu: T::of(mu),
            };
            train_local(global, ctx, cfg, &mut objective, rng)
        }
        Algorithm::FedPsd(_) => Err(Error::Contract(
            "local_train_baseline handles fedavg and fedprox only".into(),
        )),
    }
}
