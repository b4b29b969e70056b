//! Deterministic stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! SplitMix64 hash chain over `(master seed, path)`, where the path names the
//! consumer: replication index, point id, edge pair, and so on. Streams are
//! therefore independent of thread scheduling and of the order in which
//! consumers ask for them.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Path tags for the major stream families. Keeping them in one place makes
/// collisions between subsystems impossible by construction.
pub mod tag {
    pub const POINTS: u64 = 0x01;
    pub const TRAJECTORY: u64 = 0x02;
    pub const EDGES: u64 = 0x03;
    pub const REPLICATION: u64 = 0x04;
    pub const MONTE_CARLO: u64 = 0x05;
    pub const CHECK: u64 = 0x06;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Hash a seed and a path of labels into a single 64-bit value.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    let mut state = master ^ 0x6a09e667f3bcc908;
    let mut acc = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0x2545f4914f6cdd1d);
        acc ^= splitmix64(&mut state);
    }
    acc
}

/// ChaCha8 generator for the stream named by `(master, path)`.
pub fn stream_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut state = derive_key(master, path);
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Uniform in `[0, 1)` for an unordered pair, invariant under swapping the
/// ids. Used for potential-edge coin flips so the edge set does not depend
/// on enumeration order.
pub fn pair_uniform(master: u64, a: u64, b: u64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let bits = derive_key(master, &[tag::EDGES, lo, hi]);
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
