//! Reproducible random streams.
//!
//! Every draw in a study gets its own generator derived from the master seed
//! and a path of indices (replication, sample, ...), so results do not depend
//! on how replications are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for the stream identified by `path` under `master`.
pub fn stream_rng(master: u64, path: &[u64]) -> StreamRng {
    let mut key = splitmix64(master);
    for &p in path {
        key = splitmix64(key ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
    }
    ChaCha8Rng::seed_from_u64(key)
}
