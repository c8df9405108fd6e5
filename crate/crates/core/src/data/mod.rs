//! Datasets, IDX serialization, non-IID partitioners and per-client priors.

mod dataset;
pub mod idx;
mod partition;
mod prior;
mod split;
mod synth;

pub use dataset::LabeledDataset;
pub use idx::{load_idx, load_mnist, read_idx_files, IdxElement};
pub use partition::{partition_dirichlet, partition_sharding, ClientPartition, DIRICHLET_RETRIES};
pub use prior::{class_prior, ClassPrior, DEFAULT_PRIOR_EPSILON};
pub use split::{client_test_split, TestSplitMode};
pub use synth::{synth_generate, synth_train_test};
