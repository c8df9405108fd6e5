use crate::config::{DatasetConfig, ExperimentConfig, PartitionConfig};
use crate::data::{
    class_prior, client_test_split, load_mnist, partition_dirichlet, partition_sharding,
    synth_train_test, ClassPrior, ClientPartition, LabeledDataset,
};
use crate::error::{Error, Result};
use crate::fedpsd::ClientHistory;
use crate::scalar::Scalar;

/// Everything the server knows about one client between rounds.
#[derive(Debug, Clone)]
pub struct ClientState<T> {
    pub partition: ClientPartition,
    pub prior: ClassPrior<T>,
    /// Present once the client has trained under FedPSD.
    pub history: Option<ClientHistory<T>>,
    pub last_participation: Option<usize>,
    /// Local test accuracy of the client's most recent personalized model.
    pub last_accuracy: Option<f64>,
}

impl<T> ClientState<T> {
    pub fn client_id(&self) -> usize {
        self.partition.client_id
    }
}

/// Global train/test data plus the per-client views of it.
#[derive(Debug, Clone)]
pub struct Federation<T> {
    pub train: LabeledDataset<T>,
    pub test: LabeledDataset<T>,
    pub clients: Vec<ClientState<T>>,
}

impl<T: Scalar> Federation<T> {
    /// Loads or generates the configured dataset and partitions it.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let (train, test) = match &cfg.dataset {
            DatasetConfig::Mnist { dir } => load_mnist::<T>(dir)?,
            DatasetConfig::Synthetic {
                classes,
                dim,
                train_per_class,
                test_per_class,
                spread,
                data_seed,
            } => synth_train_test::<T>(
                *classes,
                *dim,
                *train_per_class,
                *test_per_class,
                *data_seed,
                *spread,
            )?,
        };
        Self::from_datasets(cfg, train, test)
    }

    /// Partitions explicit datasets according to `cfg`.
    pub fn from_datasets(
        cfg: &ExperimentConfig,
        train: LabeledDataset<T>,
        test: LabeledDataset<T>,
    ) -> Result<Self> {
        if train.num_classes() != test.num_classes() || train.dim() != test.dim() {
            return Err(Error::Config(
                "train and test sets disagree on class count or feature width".into(),
            ));
        }
        let partitions = match cfg.partition {
            PartitionConfig::Sharding { shards_per_client } => {
                partition_sharding(&train, shards_per_client, cfg.clients, cfg.seed)?
            }
            PartitionConfig::Dirichlet { alpha } => {
                partition_dirichlet(&train, alpha, cfg.clients, cfg.seed)?
            }
        };
        let clients = partitions
            .into_iter()
            .map(|mut partition| {
                let counts = train.class_counts(&partition.train_indices);
                partition.test_indices = client_test_split(
                    &test,
                    &counts,
                    cfg.client_test_size,
                    cfg.client_test,
                    cfg.seed,
                    partition.client_id,
                )?;
                if partition.test_indices.is_empty() {
                    return Err(Error::Partition(format!(
                        "client {} has no local test samples",
                        partition.client_id
                    )));
                }
                Ok(ClientState {
                    prior: class_prior(&counts, cfg.prior_epsilon)?,
                    partition,
                    history: None,
                    last_participation: None,
                    last_accuracy: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Federation {
            train,
            test,
            clients,
        })
    }

    /// Widths of the model for this data: input, hidden..., classes.
    pub fn model_sizes(&self, hidden: &[usize]) -> Vec<usize> {
        std::iter::once(self.train.dim())
            .chain(hidden.iter().copied())
            .chain(std::iter::once(self.train.num_classes()))
            .collect()
    }
}
