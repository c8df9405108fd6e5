use ndarray::{Array2, Axis};

use crate::data::ClassPrior;
use crate::engine::{
    cross_entropy_rows, train_local, ClientState, LocalContext, LocalObjective, LocalOutcome,
    LocalTrainConfig, EVAL_CHUNK,
};
use crate::error::{Error, Result};
use crate::fedpsd::{
    alpha_schedule, fuse_with_label, psd_kd_loss, ClientHistory, FirstEpochTeacher, PsdConfig,
    TeacherSource,
};
use crate::nn::{softmax_rows, Mlp};
use crate::rng::Rng;
use crate::scalar::Scalar;

enum Teacher<T> {
    None,
    Labels,
    History,
    PreviousEpoch(Array2<T>),
}

/// Local objective `L_CE + L_KD` with per-epoch teacher selection.
pub struct PsdObjective<'a, T> {
    config: PsdConfig,
    alpha: T,
    prior: Option<&'a ClassPrior<T>>,
    history: Option<&'a ClientHistory<T>>,
    teacher: Teacher<T>,
    /// Student probabilities recorded during the running epoch.
    recorded: Option<Array2<T>>,
}

impl<'a, T: Scalar> PsdObjective<'a, T> {
    /// `prior` is required when calibration is on.
    pub fn new(
        config: PsdConfig,
        alpha: f64,
        prior: Option<&'a ClassPrior<T>>,
        history: Option<&'a ClientHistory<T>>,
    ) -> Result<Self> {
        if config.cll && prior.is_none() {
            return Err(Error::Contract("calibrated loss requires a class prior".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Contract(format!("fusion weight {alpha} outside [0, 1]")));
        }
        Ok(PsdObjective {
            config,
            alpha: T::of(alpha),
            prior: if config.cll { prior } else { None },
            history,
            teacher: Teacher::None,
            recorded: None,
        })
    }

    fn records_outputs(&self) -> bool {
        self.config.psd && self.config.teacher_source == TeacherSource::Cached
    }
}

fn predict_probs<T: Scalar>(model: &Mlp<T>, features: &Array2<T>) -> Result<Array2<T>> {
    let mut out = Array2::zeros((features.nrows(), model.output_dim()));
    let rows: Vec<usize> = (0..features.nrows()).collect();
    for chunk in rows.chunks(EVAL_CHUNK) {
        let x = features.select(Axis(0), chunk);
        let probs = softmax_rows(model.forward(x.view())?.view());
        for (&r, p) in chunk.iter().zip(probs.rows()) {
            out.row_mut(r).assign(&p);
        }
    }
    Ok(out)
}

impl<T: Scalar> LocalObjective<T> for PsdObjective<'_, T> {
    fn begin_epoch(&mut self, epoch: usize, model: &Mlp<T>, ctx: &LocalContext<'_, T>) -> Result<()> {
        let n = ctx.labels.len();
        self.teacher = if epoch == 1 {
            match (self.config.rhpk, self.history) {
                (false, _) => Teacher::None,
                (true, Some(h)) => {
                    if h.probs().dim() != (n, ctx.num_classes) {
                        return Err(Error::shape(
                            format!("history of client {}", ctx.client),
                            format!("{:?}", (n, ctx.num_classes)),
                            format!("{:?}", h.probs().dim()),
                        ));
                    }
                    Teacher::History
                }
                (true, None) => match self.config.first_epoch_teacher {
                    FirstEpochTeacher::Labels => Teacher::Labels,
                    FirstEpochTeacher::Skip => Teacher::None,
                },
            }
        } else if self.config.psd {
            let probs = match self.config.teacher_source {
                TeacherSource::Cached => self
                    .recorded
                    .take()
                    .expect("outputs are recorded during every epoch"),
                TeacherSource::Sweep => predict_probs(model, ctx.features)?,
            };
            Teacher::PreviousEpoch(probs)
        } else {
            Teacher::None
        };
        if self.records_outputs() {
            self.recorded = Some(Array2::zeros((n, ctx.num_classes)));
        }
        Ok(())
    }

    fn batch_loss(
        &mut self,
        _epoch: usize,
        rows: &[usize],
        labels: &[usize],
        logits: &Array2<T>,
    ) -> Result<(T, Array2<T>)> {
        let (mut total, mut grads) = cross_entropy_rows(logits, labels, self.prior)?;
        if let Some(recorded) = &mut self.recorded {
            let probs = softmax_rows(logits.view());
            for (&r, p) in rows.iter().zip(probs.rows()) {
                recorded.row_mut(r).assign(&p);
            }
        }
        let source = match &self.teacher {
            Teacher::None => None,
            Teacher::Labels => Some(None),
            Teacher::History => Some(Some(self.history.expect("history teacher").probs())),
            Teacher::PreviousEpoch(p) => Some(Some(p)),
        };
        if let Some(source) = source {
            let classes = logits.ncols();
            let mut h = vec![T::zero(); classes];
            for (i, (&r, &y)) in rows.iter().zip(labels).enumerate() {
                match source {
                    // the alpha -> 0 limit: pure one-hot target
                    None => {
                        h.iter_mut().for_each(|v| *v = T::zero());
                        h[y] = T::one();
                    }
                    Some(probs) => fuse_with_label(
                        probs.row(r).as_slice().expect("contiguous"),
                        y,
                        self.alpha,
                        &mut h,
                    ),
                }
                let (kd, g) = psd_kd_loss(&h, logits.row(i).as_slice().expect("contiguous"))?;
                total += kd;
                grads.row_mut(i).iter_mut().zip(g).for_each(|(dst, v)| *dst += v);
            }
        }
        Ok(crate::engine::local::batch_mean(total, grads))
    }
}

/// One FedPSD client update.
///
/// Runs local SGD on the combined objective starting from `global`, then
/// records the trained model's softmax outputs on every local training sample
/// as the client's new history. The fusion weight is
/// `alpha_schedule(ctx.round, total_rounds)` for every epoch of the round.
pub fn local_train_fedpsd<T: Scalar>(
    global: &Mlp<T>,
    client: &ClientState<T>,
    ctx: &LocalContext<'_, T>,
    train: &LocalTrainConfig<T>,
    config: &PsdConfig,
    total_rounds: usize,
    rng: &mut Rng,
) -> Result<(LocalOutcome<T>, ClientHistory<T>)> {
    let alpha = alpha_schedule(ctx.round, total_rounds);
    let mut objective = PsdObjective::new(*config, alpha, Some(&client.prior), client.history.as_ref())?;
    let outcome = train_local(global, ctx, train, &mut objective, rng)?;
    let probs = predict_probs(&outcome.params, ctx.features)?;
    let history = ClientHistory::new(client.client_id(), ctx.round, probs)?;
    Ok((outcome, history))
}
