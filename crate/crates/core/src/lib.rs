//! Federated learning simulator with personalized self-distillation.
//!
//! The numeric code is generic over [`scalar::Scalar`]; the aliases below fix
//! it to `f64`, which is what the experiments use.

pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod fedpsd;
pub mod nn;
pub mod rng;
pub mod scalar;

pub use config::{Algorithm, DatasetConfig, ExperimentConfig, PartitionConfig};
pub use engine::{MetricsSeries, RoundRecord, RoundReport, SweepRecord};
pub use error::{Error, Result};
pub use fedpsd::PsdConfig;

pub type Model = nn::Mlp<f64>;
pub type Dataset = data::LabeledDataset<f64>;
pub type Prior = data::ClassPrior<f64>;
pub type History = fedpsd::ClientHistory<f64>;
pub type Client = engine::ClientState<f64>;
pub type Fed = engine::Federation<f64>;
pub type Server = engine::ServerState<f64>;
