//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed and a stream id derived from `(purpose, index, sub-index)`. The
//! stream a replication or bootstrap draw uses depends only on its indices,
//! never on scheduling, so parallel runs are bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purposes get disjoint stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Bootstrap = 2,
    FixedCoefficients = 3,
    PairSubsample = 4,
    Test = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_id(purpose: Purpose, index: u64, sub: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(purpose as u64) ^ index) ^ sub.rotate_left(32))
}

/// Generator for `(seed, purpose, index, sub)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64, sub: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, index, sub));
    rng
}

/// A fresh seed for a sub-experiment, e.g. the bootstrap of replication `index`.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(seed ^ stream_id(purpose, index, u64::MAX))
}
