//! Seed derivation for reproducible parallel simulation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value derived purely from indices, never from scheduler state. The split
//! rule is a SplitMix64 mixing chain: starting from the master seed, each
//! component (scenario code, n, p, replication index, stream label) is folded
//! in with `mix64(state ^ mix64(part))`. Identical indices therefore yield
//! identical streams on any platform and under any thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Bijective on u64, good avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a sequence of parts into a master seed, order-sensitively.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = mix64(master);
    for &part in parts {
        state = mix64(state ^ mix64(part));
    }
    state
}

/// FNV-1a over bytes; stable across platforms and releases, unlike
/// `DefaultHasher`. Used to turn tag strings into seed parts.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The crate-wide generator: ChaCha with 8 rounds, seeded from a derived value.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
