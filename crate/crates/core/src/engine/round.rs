use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{Algorithm, ExperimentConfig};
use crate::engine::{
    accuracy_on, aggregate, local_train_baseline, sample_clients, Federation, LocalContext,
    LocalTrainConfig,
};
use crate::error::Result;
use crate::fedpsd::{local_train_fedpsd, ClientHistory};
use crate::nn::Mlp;
use crate::rng::{purpose, stream};
use crate::scalar::Scalar;

/// Global model plus the index of the next round to run (0-based).
#[derive(Debug, Clone)]
pub struct ServerState<T> {
    pub global: Mlp<T>,
    pub round: usize,
}

/// Everything observed during one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    /// 0-based round index.
    pub round: usize,
    pub sampled: Vec<usize>,
    /// Local test accuracy of each sampled client's trained model, before
    /// aggregation, in `sampled` order.
    pub client_accuracies: Vec<f64>,
    /// Accuracy of the aggregated model on the full test set.
    pub server_accuracy: f64,
    /// Mean training loss per local epoch, per sampled client.
    pub loss_traces: Vec<Vec<f64>>,
}

impl RoundReport {
    pub fn avg_client_accuracy(&self) -> f64 {
        self.client_accuracies.iter().sum::<f64>() / self.client_accuracies.len() as f64
    }

    /// Final-epoch training loss averaged over the sampled clients.
    pub fn mean_local_loss(&self) -> f64 {
        let last: Vec<f64> = self
            .loss_traces
            .iter()
            .filter_map(|trace| trace.last().copied())
            .collect();
        if last.is_empty() {
            return 0.0;
        }
        last.iter().sum::<f64>() / last.len() as f64
    }
}

/// `base_lr * decay^round`.
pub fn lr_schedule(base_lr: f64, decay: f64, round: usize) -> f64 {
    base_lr * decay.powi(round as i32)
}

struct ClientUpdate<T> {
    params: Mlp<T>,
    samples: usize,
    history: Option<ClientHistory<T>>,
    accuracy: f64,
    losses: Vec<f64>,
}

fn train_client<T: Scalar>(
    server: &ServerState<T>,
    federation: &Federation<T>,
    cfg: &ExperimentConfig,
    client_id: usize,
) -> Result<ClientUpdate<T>> {
    let client = &federation.clients[client_id];
    let (features, labels) = federation.train.gather(&client.partition.train_indices);
    let ctx = LocalContext {
        round: server.round,
        client: client_id,
        features: &features,
        labels: &labels,
        num_classes: federation.train.num_classes(),
    };
    let train = LocalTrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: T::of(lr_schedule(cfg.lr, cfg.lr_decay, server.round)),
        momentum: T::of(cfg.momentum),
        weight_decay: T::of(cfg.weight_decay),
    };
    let mut rng = stream(
        cfg.seed,
        &[purpose::LOCAL_TRAINING, server.round as u64, client_id as u64],
    );
    let (outcome, history) = match &cfg.algorithm {
        Algorithm::FedPsd(psd) => {
            let (outcome, history) = local_train_fedpsd(
                &server.global,
                client,
                &ctx,
                &train,
                psd,
                cfg.rounds,
                &mut rng,
            )?;
            (outcome, Some(history))
        }
        baseline => (
            local_train_baseline(&server.global, &ctx, &train, baseline, &mut rng)?,
            None,
        ),
    };
    let accuracy = accuracy_on(&outcome.params, &federation.test, &client.partition.test_indices)?;
    Ok(ClientUpdate {
        params: outcome.params,
        samples: labels.len(),
        history,
        accuracy,
        losses: outcome.epoch_losses,
    })
}

/// Runs one communication round and advances `server.round`.
///
/// Sampled clients train independently from the current global model, on
/// `pool` when one is given. Results are combined in sampled-id order, so
/// the outcome does not depend on the number of threads. Any client failure
/// aborts the round before aggregation and leaves all state untouched.
pub fn run_round<T: Scalar>(
    server: &mut ServerState<T>,
    federation: &mut Federation<T>,
    cfg: &ExperimentConfig,
    pool: Option<&ThreadPool>,
) -> Result<RoundReport> {
    let sampled = sample_clients(federation.clients.len(), cfg.fraction, server.round, cfg.seed);
    let shared: (&ServerState<T>, &Federation<T>) = (server, federation);
    let work = |&id: &usize| train_client(shared.0, shared.1, cfg, id);
    let results: Vec<Result<ClientUpdate<T>>> = match pool {
        Some(pool) => pool.install(|| sampled.par_iter().map(work).collect()),
        None => sampled.iter().map(work).collect(),
    };
    let updates = results.into_iter().collect::<Result<Vec<_>>>()?;

    let pairs: Vec<(Mlp<T>, usize)> = updates
        .iter()
        .map(|u| (u.params.clone(), u.samples))
        .collect();
    let global = aggregate(&pairs)?;
    let server_accuracy = accuracy_on(
        &global,
        &federation.test,
        &(0..federation.test.len()).collect::<Vec<_>>(),
    )?;

    let mut client_accuracies = Vec::with_capacity(updates.len());
    let mut loss_traces = Vec::with_capacity(updates.len());
    for (&id, update) in sampled.iter().zip(updates) {
        let client = &mut federation.clients[id];
        if update.history.is_some() {
            client.history = update.history;
        }
        client.last_participation = Some(server.round);
        client.last_accuracy = Some(update.accuracy);
        client_accuracies.push(update.accuracy);
        loss_traces.push(update.losses);
    }
    let report = RoundReport {
        round: server.round,
        sampled,
        client_accuracies,
        server_accuracy,
        loss_traces,
    };
    server.global = global;
    server.round += 1;
    Ok(report)
}
