use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{self, purpose};
use crate::scalar::Scalar;

/// Re-draw budget for a Dirichlet client that ends up with no samples.
pub const DIRICHLET_RETRIES: usize = 100;

/// One client's share of the federation's data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientPartition {
    pub client_id: usize,
    /// Rows of the global training set, ascending.
    pub train_indices: Vec<usize>,
    /// Rows of the global test set; filled by [`crate::data::client_test_split`].
    pub test_indices: Vec<usize>,
}

impl ClientPartition {
    fn new(client_id: usize, mut train_indices: Vec<usize>) -> Self {
        train_indices.sort_unstable();
        ClientPartition {
            client_id,
            train_indices,
            test_indices: Vec::new(),
        }
    }

    /// `n_k`
    pub fn len(&self) -> usize {
        self.train_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_indices.is_empty()
    }
}

struct Shard {
    indices: Vec<usize>,
    classes: BTreeSet<usize>,
}

/// Pathological sharding.
///
/// Samples are sorted by label and cut into `S * K` contiguous shards of
/// `floor(M / (S * K))` samples (the trailing remainder of the sorted order is
/// dropped). Every client receives exactly `S` shards.
///
/// When class sizes are not multiples of the shard size, some shards straddle
/// a class boundary. Those shards are placed first and their owners are
/// topped up only with shards whose classes keep the owner at `<= S` distinct
/// labels; all remaining single-class shards are dealt out uniformly at random.
pub fn partition_sharding<T: Scalar>(
    dataset: &LabeledDataset<T>,
    shards_per_client: usize,
    clients: usize,
    seed: u64,
) -> Result<Vec<ClientPartition>> {
    let s = shards_per_client;
    if s == 0 || clients == 0 {
        return Err(Error::Partition(
            "shards per client and client count must be positive".into(),
        ));
    }
    let total_shards = s * clients;
    if total_shards > dataset.len() {
        return Err(Error::Partition(format!(
            "{total_shards} shards requested but the dataset has only {} samples",
            dataset.len()
        )));
    }
    let shard_size = dataset.len() / total_shards;
    let mut sorted: Vec<usize> = (0..dataset.len()).collect();
    sorted.sort_by_key(|&i| (dataset.labels()[i], i));

    let shards: Vec<Shard> = sorted[..total_shards * shard_size]
        .chunks(shard_size)
        .map(|chunk| Shard {
            indices: chunk.to_vec(),
            classes: chunk.iter().map(|&i| dataset.labels()[i]).collect(),
        })
        .collect();
    if let Some(bad) = shards.iter().find(|sh| sh.classes.len() > s) {
        return Err(Error::Partition(format!(
            "a shard spans {} classes, more than S = {s}; use fewer clients or larger shards",
            bad.classes.len()
        )));
    }

    let mut rng = rng::stream(seed, &[purpose::SHARDING]);
    let mut last_err = None;
    for _ in 0..SHARDING_ATTEMPTS {
        match assign_shards(&shards, s, clients, &mut rng) {
            Ok(assignment) => {
                return Ok(assignment
                    .into_iter()
                    .enumerate()
                    .map(|(k, ids)| {
                        let indices = ids
                            .iter()
                            .flat_map(|&j| shards[j].indices.iter().copied())
                            .collect();
                        ClientPartition::new(k, indices)
                    })
                    .collect());
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

const SHARDING_ATTEMPTS: usize = 100;

/// One randomized attempt at giving every client `s` shards with at most `s`
/// distinct classes.
fn assign_shards<R: Rng + ?Sized>(
    shards: &[Shard],
    s: usize,
    clients: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let mut order: Vec<usize> = (0..shards.len()).collect();
    order.shuffle(rng);
    let (mixed, mut pure): (Vec<usize>, Vec<usize>) =
        order.into_iter().partition(|&j| shards[j].classes.len() > 1);
    let mut fresh: Vec<usize> = (0..clients).collect();
    fresh.shuffle(rng);

    struct Constrained {
        client: usize,
        shards: Vec<usize>,
        classes: BTreeSet<usize>,
    }
    let mut constrained: Vec<Constrained> = Vec::new();
    for j in mixed {
        let fits: Vec<usize> = constrained
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                c.shards.len() < s && c.classes.union(&shards[j].classes).count() <= s
            })
            .map(|(k, _)| k)
            .collect();
        let options = fits.len() + usize::from(!fresh.is_empty());
        if options == 0 {
            return Err(Error::Partition(
                "cannot place class-straddling shards within the S-class limit".into(),
            ));
        }
        let pick = rng.random_range(0..options);
        if pick < fits.len() {
            let c = &mut constrained[fits[pick]];
            c.shards.push(j);
            c.classes.extend(&shards[j].classes);
        } else {
            constrained.push(Constrained {
                client: fresh.pop().expect("checked non-empty"),
                shards: vec![j],
                classes: shards[j].classes.clone(),
            });
        }
    }

    let compatible = |c: &Constrained, pure: &[usize]| -> Vec<usize> {
        (0..pure.len())
            .filter(|&p| {
                let class = *shards[pure[p]].classes.first().expect("non-empty shard");
                c.classes.contains(&class) || c.classes.len() < s
            })
            .collect()
    };
    // top up the most constrained client first
    loop {
        let open = constrained
            .iter()
            .enumerate()
            .filter(|(_, c)| c.shards.len() < s)
            .map(|(k, c)| (compatible(c, &pure).len(), k))
            .min();
        let Some((_, k)) = open else { break };
        let options = compatible(&constrained[k], &pure);
        if options.is_empty() {
            return Err(Error::Partition(
                "not enough single-class shards to keep every client within S classes".into(),
            ));
        }
        let j = pure.remove(options[rng.random_range(0..options.len())]);
        let c = &mut constrained[k];
        c.classes.extend(&shards[j].classes);
        c.shards.push(j);
    }

    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); clients];
    for c in constrained {
        assignment[c.client] = c.shards;
    }
    debug_assert_eq!(pure.len(), fresh.len() * s);
    for (client, chunk) in fresh.into_iter().zip(pure.chunks(s)) {
        assignment[client] = chunk.to_vec();
    }
    Ok(assignment)
}

fn draw_dirichlet<R: Rng + ?Sized>(alpha: f64, dims: usize, rng: &mut R) -> Option<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).ok()?;
    let draws: Vec<f64> = (0..dims).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    (sum > 0.0 && sum.is_finite()).then(|| draws.into_iter().map(|g| g / sum).collect())
}

/// Splits `need` into integer counts proportional to `weights` (largest
/// remainder; ties to the lowest class).
fn apportion(need: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let shares: Vec<f64> = weights.iter().map(|w| need as f64 * w / total).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&c| weights[c] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(need.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Per-class counts for one client: proportional to `q`, capped by what is
/// still available, with any shortfall re-spread over classes that still
/// have samples.
fn allocate(q: &[f64], target: usize, available: &[usize]) -> Vec<usize> {
    let mut alloc = vec![0usize; q.len()];
    let mut need = target;
    while need > 0 {
        let open: Vec<usize> = (0..q.len()).filter(|&c| available[c] > alloc[c]).collect();
        if open.is_empty() {
            break;
        }
        let mut weights = vec![0.0; q.len()];
        for &c in &open {
            weights[c] = q[c];
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            for &c in &open {
                weights[c] = (available[c] - alloc[c]) as f64;
            }
        }
        let mut took = 0;
        for (c, want) in apportion(need, &weights).into_iter().enumerate() {
            let take = want.min(available[c] - alloc[c]);
            alloc[c] += take;
            took += take;
        }
        need -= took;
        if took == 0 {
            break;
        }
    }
    alloc
}

/// Latent-Dirichlet partitioning.
///
/// Each client in turn draws its class proportions from a symmetric
/// `Dir(alpha)` and requests `floor(M / K)` samples split by those proportions
/// from per-class pools of not-yet-assigned samples. Classes whose pools run
/// dry are dropped and the remaining proportions renormalised. A client that
/// would end up empty re-draws its proportions, up to [`DIRICHLET_RETRIES`]
/// times.
pub fn partition_dirichlet<T: Scalar>(
    dataset: &LabeledDataset<T>,
    alpha: f64,
    clients: usize,
    seed: u64,
) -> Result<Vec<ClientPartition>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Partition(format!("Dirichlet alpha must be positive, got {alpha}")));
    }
    if clients == 0 {
        return Err(Error::Partition("client count must be positive".into()));
    }
    let target = dataset.len() / clients;
    if target == 0 {
        return Err(Error::Partition(format!(
            "{clients} clients cannot share {} samples; use a larger dataset",
            dataset.len()
        )));
    }
    let mut rng = rng::stream(seed, &[purpose::DIRICHLET]);
    let mut pools = dataset.indices_by_class();
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let classes = dataset.num_classes();
    let mut partitions = Vec::with_capacity(clients);
    for k in 0..clients {
        let available: Vec<usize> = pools.iter().map(Vec::len).collect();
        let mut counts = None;
        for _ in 0..DIRICHLET_RETRIES {
            let Some(q) = draw_dirichlet(alpha, classes, &mut rng) else {
                continue;
            };
            let alloc = allocate(&q, target, &available);
            if alloc.iter().sum::<usize>() > 0 {
                counts = Some(alloc);
                break;
            }
        }
        let counts = counts.ok_or_else(|| {
            Error::Partition(format!(
                "client {k} stayed empty after {DIRICHLET_RETRIES} draws; increase the dataset size or alpha"
            ))
        })?;
        let mut indices = Vec::with_capacity(target);
        for (pool, n) in pools.iter_mut().zip(counts) {
            indices.extend(pool.drain(pool.len() - n..));
        }
        partitions.push(ClientPartition::new(k, indices));
    }
    Ok(partitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use std::collections::HashSet;

    fn labelled(labels: Vec<usize>, classes: usize) -> LabeledDataset<f64> {
        LabeledDataset::new(Array2::zeros((labels.len(), 1)), labels, classes).unwrap()
    }

    fn balanced(classes: usize, per_class: usize) -> LabeledDataset<f64> {
        labelled(
            (0..classes * per_class).map(|i| i % classes).collect(),
            classes,
        )
    }

    fn check_sharding(ds: &LabeledDataset<f64>, parts: &[ClientPartition], s: usize) {
        let k = parts.len();
        let size = ds.len() / (s * k);
        let mut seen = HashSet::new();
        for p in parts {
            assert_eq!(p.len(), s * size);
            let classes: HashSet<_> = p.train_indices.iter().map(|&i| ds.labels()[i]).collect();
            assert!(classes.len() <= s, "client {} has {} classes", p.client_id, classes.len());
            for &i in &p.train_indices {
                assert!(seen.insert(i), "index {i} assigned twice");
            }
        }
    }

    #[test]
    fn sharding_balanced_classes() {
        let ds = balanced(10, 60);
        let parts = partition_sharding(&ds, 2, 10, 3).unwrap();
        check_sharding(&ds, &parts, 2);
    }

    #[test]
    fn sharding_with_straddling_shards_respects_class_cap() {
        // uneven class sizes force shards across class boundaries
        let sizes = [37, 53, 41, 66, 29, 58, 47, 44, 61, 64];
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        let ds = labelled(labels, 10);
        for seed in 0..20 {
            let parts = partition_sharding(&ds, 2, 10, seed).unwrap();
            check_sharding(&ds, &parts, 2);
        }
    }

    #[test]
    fn single_client_owns_everything() {
        let ds = balanced(4, 25);
        let parts = partition_sharding(&ds, 4, 1, 0).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].train_indices, (0..100).collect::<Vec<_>>());
        assert_eq!(ds.class_counts(&parts[0].train_indices), vec![25; 4]);
    }

    #[test]
    fn sharding_truncates_remainder_and_is_deterministic() {
        let ds = balanced(3, 11);
        let a = partition_sharding(&ds, 2, 4, 5).unwrap();
        assert!(a.iter().all(|p| p.len() == 8));
        assert_eq!(a, partition_sharding(&ds, 2, 4, 5).unwrap());
        assert_ne!(a, partition_sharding(&ds, 2, 4, 6).unwrap());
    }

    #[test]
    fn sharding_rejects_too_many_shards() {
        let ds = balanced(2, 3);
        assert!(partition_sharding(&ds, 2, 4, 0).is_err());
    }

    fn tv_from_uniform(counts: &[usize]) -> f64 {
        let n: usize = counts.iter().sum();
        let l = counts.len() as f64;
        0.5 * counts
            .iter()
            .map(|&c| (c as f64 / n as f64 - 1.0 / l).abs())
            .sum::<f64>()
    }

    fn check_dirichlet(ds: &LabeledDataset<f64>, parts: &[ClientPartition]) {
        let mut seen = HashSet::new();
        for p in parts {
            assert!(!p.is_empty());
            for &i in &p.train_indices {
                assert!(seen.insert(i));
            }
        }
        assert!(seen.len() <= ds.len());
    }

    #[test]
    fn dirichlet_large_alpha_is_near_uniform() {
        let ds = balanced(10, 200);
        for seed in 0..5 {
            let parts = partition_dirichlet(&ds, 1e6, 10, seed).unwrap();
            check_dirichlet(&ds, &parts);
            for p in &parts {
                let tv = tv_from_uniform(&ds.class_counts(&p.train_indices));
                assert!(tv < 0.05, "seed {seed} client {} tv {tv}", p.client_id);
            }
        }
    }

    #[test]
    fn dirichlet_small_alpha_is_skewed() {
        let ds = balanced(10, 200);
        for seed in 0..10 {
            let parts = partition_dirichlet(&ds, 0.05, 10, seed).unwrap();
            check_dirichlet(&ds, &parts);
            let concentrated = parts
                .iter()
                .filter(|p| {
                    let mut counts = ds.class_counts(&p.train_indices);
                    counts.sort_unstable_by(|a, b| b.cmp(a));
                    (counts[0] + counts[1]) as f64 >= 0.8 * p.len() as f64
                })
                .count();
            assert!(concentrated >= 5, "seed {seed}: only {concentrated} skewed clients");
        }
    }

    #[test]
    fn dirichlet_is_deterministic() {
        let ds = balanced(5, 40);
        let a = partition_dirichlet(&ds, 0.3, 8, 1).unwrap();
        assert_eq!(a, partition_dirichlet(&ds, 0.3, 8, 1).unwrap());
    }

    #[test]
    fn dirichlet_rejects_bad_arguments() {
        let ds = balanced(2, 2);
        assert!(partition_dirichlet(&ds, 0.0, 2, 0).is_err());
        assert!(partition_dirichlet(&ds, 1.0, 5, 0).is_err());
    }

    #[test]
    fn apportion_preserves_total() {
        assert_eq!(apportion(10, &[0.5, 0.5]), vec![5, 5]);
        assert_eq!(apportion(7, &[1.0, 1.0, 1.0]).iter().sum::<usize>(), 7);
        assert_eq!(apportion(3, &[0.0, 1.0]), vec![0, 3]);
    }
}
