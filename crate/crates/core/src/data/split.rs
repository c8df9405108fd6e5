use log::warn;
use rand::seq::SliceRandom;

use crate::data::LabeledDataset;
use crate::error::Result;
use crate::rng::{self, purpose};
use crate::scalar::Scalar;

/// How a client's local test set is composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestSplitMode {
    /// Same label proportions as the client's training data.
    #[default]
    Matched,
    /// Same label proportions as the global test set.
    Global,
}

/// Draws up to `budget` rows of `global_test` for one client.
///
/// Per-class quotas are the target proportions times `budget`, rounded, with at
/// least one sample for every class the target covers; each class is sampled
/// without replacement and capped at its size in the test pool. Different
/// clients may receive overlapping rows. Returned indices are ascending.
pub fn client_test_split<T: Scalar>(
    global_test: &LabeledDataset<T>,
    train_counts: &[usize],
    budget: usize,
    mode: TestSplitMode,
    seed: u64,
    client_id: usize,
) -> Result<Vec<usize>> {
    let pools = global_test.indices_by_class();
    let target: Vec<usize> = match mode {
        TestSplitMode::Matched => train_counts.to_vec(),
        TestSplitMode::Global => pools.iter().map(Vec::len).collect(),
    };
    let total: usize = target.iter().sum();
    let mut rng = rng::stream(seed, &[purpose::TEST_SPLIT, client_id as u64]);
    let mut out = Vec::with_capacity(budget);
    for (class, (&count, pool)) in target.iter().zip(&pools).enumerate() {
        if count == 0 {
            continue;
        }
        if pool.is_empty() {
            warn!("client {client_id}: class {class} has no test samples; skipping it");
            continue;
        }
        let quota = ((count as f64 / total as f64) * budget as f64).round().max(1.0) as usize;
        let mut pool = pool.clone();
        pool.shuffle(&mut rng);
        out.extend(pool.into_iter().take(quota));
    }
    out.sort_unstable();
    Ok(out)
}
