//! Deterministic seed derivation.
//!
//! Work items (replicates, grid points, sub-draws) derive their own seeds
//! from a base seed so that parallel execution order never affects results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, cheap, stable.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with a sequence of stream indices (grid index, replicate
/// index, draw index, ...). Order-sensitive: `mix(s, &[0, 1]) != mix(s, &[1, 0])`.
pub fn mix(base: u64, streams: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &s in streams {
        state = splitmix64(state ^ splitmix64(s.wrapping_add(0x632b_e5ab)));
    }
    state
}

/// The RNG used everywhere in the crate, constructed from a 64-bit seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
