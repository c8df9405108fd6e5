use rand::seq::index;

use crate::rng::{self, purpose};

/// `ceil(C K)`, guarded against floating-point noise in `C K`.
pub fn sample_count(clients: usize, fraction: f64) -> usize {
    let raw = fraction * clients as f64;
    ((raw - 1e-9).ceil() as usize).clamp(1, clients)
}

/// Uniform sample without replacement of `ceil(C K)` client ids for round `t`,
/// returned ascending. Depends only on `(seed, t)`.
pub fn sample_clients(clients: usize, fraction: f64, round: usize, seed: u64) -> Vec<usize> {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
    let count = sample_count(clients, fraction);
    let mut rng = rng::stream(seed, &[purpose::CLIENT_SAMPLING, round as u64]);
    let mut ids = index::sample(&mut rng, clients, count).into_vec();
    ids.sort_unstable();
    ids
}
