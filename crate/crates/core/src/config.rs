//! Experiment configuration. Defaults follow the reference FL setup: 100
//! clients, 10% participation, 5 local epochs, 200 rounds, batch 50,
//! SGD(lr 0.01, momentum 0.9, weight decay 1e-5), lr x0.99 per round.

use std::path::PathBuf;

use crate::data::{TestSplitMode, DEFAULT_PRIOR_EPSILON};
use crate::error::{Error, Result};
use crate::fedpsd::PsdConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetConfig {
    /// The four standard MNIST IDX files in `dir`.
    Mnist { dir: PathBuf },
    /// Gaussian blobs (see [`crate::data::synth_train_test`]).
    Synthetic {
        classes: usize,
        dim: usize,
        train_per_class: usize,
        test_per_class: usize,
        spread: f64,
        data_seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionConfig {
    Sharding { shards_per_client: usize },
    Dirichlet { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    FedAvg,
    FedProx { mu: f64 },
    FedPsd(PsdConfig),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::FedAvg => "fedavg",
            Algorithm::FedProx { .. } => "fedprox",
            Algorithm::FedPsd(_) => "fedpsd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub partition: PartitionConfig,
    /// `K`
    pub clients: usize,
    /// `C`, the fraction of clients sampled per round.
    pub fraction: f64,
    /// `t_total`
    pub rounds: usize,
    /// `E`
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Hidden layer widths of the MLP; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Additive smoothing for client class priors.
    pub prior_epsilon: f64,
    pub client_test: TestSplitMode,
    /// Per-client local test budget.
    pub client_test_size: usize,
    /// Evaluate every client every this many rounds (0 disables).
    pub sweep_every: usize,
    /// Worker threads for local training; results do not depend on it.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::Mnist {
                dir: PathBuf::from("data/mnist"),
            },
            partition: PartitionConfig::Sharding { shards_per_client: 2 },
            clients: 100,
            fraction: 0.1,
            rounds: 200,
            epochs: 5,
            batch_size: 50,
            lr: 0.01,
            lr_decay: 0.99,
            momentum: 0.9,
            weight_decay: 1e-5,
            hidden: vec![128],
            algorithm: Algorithm::FedPsd(PsdConfig::default()),
            seed: 0,
            prior_epsilon: DEFAULT_PRIOR_EPSILON,
            client_test: TestSplitMode::Global,
            client_test_size: 200,
            sweep_every: 10,
            threads: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("clients", self.clients),
            ("rounds", self.rounds),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("client_test_size", self.client_test_size),
            ("threads", self.threads),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::Config(format!("fraction must lie in (0, 1], got {}", self.fraction)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be non-negative, got {}", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if !(self.prior_epsilon >= 0.0 && self.prior_epsilon.is_finite()) {
            return Err(Error::Config("prior_epsilon must be non-negative".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        match self.partition {
            PartitionConfig::Sharding { shards_per_client: 0 } => {
                return Err(Error::Config("S must be positive".into()))
            }
            PartitionConfig::Dirichlet { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return Err(Error::Config(format!("dirichlet_alpha must be positive, got {alpha}")))
            }
            _ => {}
        }
        if let Algorithm::FedProx { mu } = self.algorithm {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(Error::Config(format!("mu must be non-negative, got {mu}")));
            }
        }
        if let Algorithm::FedPsd(psd) = self.algorithm {
            if psd.cll && self.prior_epsilon == 0.0 {
                return Err(Error::Config(
                    "calibrated loss needs prior_epsilon > 0 so every class prior is positive".into(),
                ));
            }
        }
        if let DatasetConfig::Synthetic {
            classes,
            dim,
            train_per_class,
            test_per_class,
            spread,
            ..
        } = self.dataset
        {
            if classes < 2 || dim < 2 || train_per_class == 0 || test_per_class == 0 {
                return Err(Error::Config(
                    "synthetic data needs classes >= 2, dim >= 2 and positive sample counts".into(),
                ));
            }
            if !(spread >= 0.0 && spread.is_finite()) {
                return Err(Error::Config("spread must be non-negative".into()));
            }
        }
        Ok(())
    }
}
