//! Keyed random streams.
//!
//! Every random decision in a run draws from a ChaCha stream derived from the
//! experiment seed plus a tuple of keys (purpose, round, client, ...). Streams
//! never depend on scheduling order, so results are identical for any number
//! of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream purposes. Kept distinct so that unrelated draws never share state.
pub mod purpose {
    pub const MODEL_INIT: u64 = 1;
    pub const CLIENT_SAMPLING: u64 = 2;
    pub const LOCAL_TRAINING: u64 = 3;
    pub const SHARDING: u64 = 4;
    pub const DIRICHLET: u64 = 5;
    pub const TEST_SPLIT: u64 = 6;
    pub const SYNTHETIC: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns the stream for `seed` and the given key path.
pub fn stream(seed: u64, keys: &[u64]) -> Rng {
    let mut state = splitmix64(seed);
    for &key in keys {
        state = splitmix64(state ^ splitmix64(key.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(state.wrapping_add(i as u64)).to_le_bytes());
    }
    Rng::from_seed(bytes)
}
