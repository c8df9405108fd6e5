//! Experiment front-end for the FedPSD simulator: configuration files, CSV
//! metrics, rounds-to-target summaries and component ablations.

mod ablation;
pub mod config_file;
mod error;
pub mod metrics;

pub use ablation::{run_ablation, AblationRow, ABLATION_ROWS};
pub use config_file::{format_config, parse_config};
pub use error::{Result, RunnerError};
pub use metrics::{emit_metrics, read_metrics, rounds_to_target, Metric, MetricsWriter};
