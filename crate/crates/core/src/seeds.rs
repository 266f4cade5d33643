//! Deterministic seed derivation.
//!
//! Every randomized computation in this crate takes a single `u64` seed and
//! derives per-unit sub-seeds (per subject, per permutation iteration, ...)
//! structurally. Work can then be distributed across any number of workers
//! without changing results: iteration `i` always sees the same RNG stream
//! no matter which thread runs it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed from `(seed, stream)`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix(mix(seed) ^ mix(stream.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// Derive a sub-seed from a seed and a textual tag (e.g. a pipeline stage name).
pub fn derive_tagged(seed: u64, tag: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    derive(seed, h)
}

/// Seeded RNG for a derived stream.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream))
}

/// Seeded RNG for a tagged stream.
pub fn rng_tagged(seed: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_tagged(seed, tag))
}
