use rayon::ThreadPoolBuilder;

use crate::config::ExperimentConfig;
use crate::engine::{accuracy_on, run_round, Federation, RoundReport, ServerState};
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::rng::{purpose, stream};
use crate::scalar::Scalar;

/// Number of trailing rounds averaged into the final reported accuracy.
pub const SMOOTHING_WINDOW: usize = 5;

/// One row of the metrics series.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    pub avg_client_top1: f64,
    pub server_top1: f64,
    pub mean_local_loss: f64,
    pub sampled: Vec<usize>,
}

impl RoundRecord {
    pub fn from_report(report: &RoundReport) -> Self {
        RoundRecord {
            round: report.round + 1,
            avg_client_top1: report.avg_client_accuracy(),
            server_top1: report.server_accuracy,
            mean_local_loss: report.mean_local_loss(),
            sampled: report.sampled.clone(),
        }
    }
}

/// Mean local accuracy over every client, using each client's latest
/// personalized model (or the current global model for clients that have
/// never trained).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub round: usize,
    pub all_client_top1: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsSeries {
    pub rounds: Vec<RoundRecord>,
    pub sweeps: Vec<SweepRecord>,
}

fn trailing_mean(values: impl DoubleEndedIterator<Item = f64>) -> Option<f64> {
    let tail: Vec<f64> = values.rev().take(SMOOTHING_WINDOW).collect();
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}

impl MetricsSeries {
    /// Average-client accuracy over the last `SMOOTHING_WINDOW` rounds.
    pub fn final_client_top1(&self) -> Option<f64> {
        trailing_mean(self.rounds.iter().map(|r| r.avg_client_top1))
    }

    /// Server accuracy over the last `SMOOTHING_WINDOW` rounds.
    pub fn final_server_top1(&self) -> Option<f64> {
        trailing_mean(self.rounds.iter().map(|r| r.server_top1))
    }
}

/// Builds the federation described by `cfg` and runs it to completion.
pub fn run_experiment<T: Scalar>(cfg: &ExperimentConfig) -> Result<MetricsSeries> {
    let federation = Federation::<T>::build(cfg)?;
    run_experiment_with(cfg, federation, |_, _| {})
}

/// Runs `cfg.rounds` rounds on a prepared federation, calling `observer`
/// after every round.
pub fn run_experiment_with<T: Scalar>(
    cfg: &ExperimentConfig,
    mut federation: Federation<T>,
    mut observer: impl FnMut(&RoundReport, &RoundRecord),
) -> Result<MetricsSeries> {
    cfg.validate()?;
    let pool = if cfg.threads > 1 {
        Some(
            ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {} threads: {e}", cfg.threads)))?,
        )
    } else {
        None
    };
    let sizes = federation.model_sizes(&cfg.hidden);
    let global = Mlp::init(&sizes, &mut stream(cfg.seed, &[purpose::MODEL_INIT]))?;
    let mut server = ServerState { global, round: 0 };
    let mut series = MetricsSeries::default();
    for _ in 0..cfg.rounds {
        let report = run_round(&mut server, &mut federation, cfg, pool.as_ref())?;
        let record = RoundRecord::from_report(&report);
        log::info!(
            "round {} client {:.4} server {:.4} loss {:.4}",
            record.round,
            record.avg_client_top1,
            record.server_top1,
            record.mean_local_loss
        );
        observer(&report, &record);
        series.rounds.push(record);
        if cfg.sweep_every > 0 && server.round % cfg.sweep_every == 0 {
            series.sweeps.push(SweepRecord {
                round: server.round,
                all_client_top1: sweep(&server, &federation)?,
            });
        }
    }
    Ok(series)
}

fn sweep<T: Scalar>(server: &ServerState<T>, federation: &Federation<T>) -> Result<f64> {
    let mut total = 0.0;
    for client in &federation.clients {
        total += match client.last_accuracy {
            Some(acc) => acc,
            None => accuracy_on(&server.global, &federation.test, &client.partition.test_indices)?,
        };
    }
    Ok(total / federation.clients.len() as f64)
}
