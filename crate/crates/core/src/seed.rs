//! Seed splitting.
//!
//! Every random stream in the crate is derived from one user seed by folding a
//! sequence of stream tags through SplitMix64. Streams used by the harness:
//!
//! | tag path                          | consumer                          |
//! |-----------------------------------|-----------------------------------|
//! | `[INSTANCE, n, attempt]`          | instance generation               |
//! | `[RUN, instance_hash, p, mixer]`  | optimizer simplex orientation     |
//! | `[SHOTS, ..., n_s]`               | measurement sampling for one run  |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INSTANCE: u64 = 0x1157_a11c;
pub const RUN: u64 = 0x5275_4e00;
pub const SHOTS: u64 = 0x5340_7400;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of stream tags.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
