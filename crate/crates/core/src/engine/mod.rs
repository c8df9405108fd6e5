//! Federated round loop: client sampling, local training, weighted
//! aggregation and per-round evaluation.

mod aggregate;
mod eval;
mod experiment;
mod federation;
pub(crate) mod local;
mod round;
mod sampling;

pub use aggregate::aggregate;
pub use eval::{accuracy_on, EVAL_CHUNK};
pub use experiment::{
    run_experiment, run_experiment_with, MetricsSeries, RoundRecord, SweepRecord, SMOOTHING_WINDOW,
};
pub use federation::{ClientState, Federation};
pub use local::{
    cross_entropy_rows, local_train_baseline, train_local, CrossEntropyObjective, LocalContext,
    LocalObjective, LocalOutcome, LocalTrainConfig, ProxObjective,
};
pub use round::{lr_schedule, run_round, RoundReport, ServerState};
pub use sampling::{sample_clients, sample_count};
