use fedpsd::config::{Algorithm, ExperimentConfig};
use fedpsd::engine::{run_experiment_with, Federation, MetricsSeries};
use fedpsd::fedpsd::PsdConfig;

use crate::error::{Result, RunnerError};

/// The component combinations, each adding one ingredient to the previous.
pub const ABLATION_ROWS: [(&str, bool, bool, bool); 4] = [
    ("baseline", false, false, false),
    ("rhpk", true, false, false),
    ("rhpk+psd", true, true, false),
    ("rhpk+psd+cll", true, true, true),
];

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub label: &'static str,
    pub config: PsdConfig,
    pub series: MetricsSeries,
    /// Smoothed final average-client accuracy.
    pub final_client_top1: f64,
    /// `final_client_top1` minus the baseline row's.
    pub delta: f64,
}

/// Runs the four component combinations on one shared federation. The
/// teacher options of `base` are kept; only the three switches change.
pub fn run_ablation(base: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    let Algorithm::FedPsd(template) = base.algorithm else {
        return Err(RunnerError::Invalid("ablation needs algorithm = fedpsd".into()));
    };
    let federation = Federation::<f64>::build(base)?;
    let mut rows: Vec<AblationRow> = Vec::with_capacity(ABLATION_ROWS.len());
    for (label, rhpk, psd, cll) in ABLATION_ROWS {
        let config = PsdConfig {
            rhpk,
            psd,
            cll,
            ..template
        };
        let cfg = ExperimentConfig {
            algorithm: Algorithm::FedPsd(config),
            ..base.clone()
        };
        let series = run_experiment_with(&cfg, federation.clone(), |_, _| {})?;
        let final_client_top1 = series.final_client_top1().unwrap_or(0.0);
        let delta = rows
            .first()
            .map_or(0.0, |b| final_client_top1 - b.final_client_top1);
        log::info!("ablation {label}: {final_client_top1:.4} ({delta:+.4})");
        rows.push(AblationRow {
            label,
            config,
            series,
            final_client_top1,
            delta,
        });
    }
    Ok(rows)
}
