//! Reproducible random streams.
//!
//! Every random draw in the crate comes from ChaCha8, a counter-based
//! generator: the 64-bit master seed fixes the key and a 64-bit stream id
//! selects an independent keystream. Instance `i` of a campaign seeded with
//! `s` always draws from stream `(s, i)`, so trials are reproducible no matter
//! the order they are run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream 0 of the generator keyed by `seed`.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child stream `index` of the generator keyed by `master`.
pub fn child_rng(master: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key path into a 64-bit child seed. Keys identify a trial by
/// content (e.g. its parameters and trial number), not by position.
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix(master), |acc, &k| mix(acc ^ mix(k)))
}
