//! Counter-based seed derivation.
//!
//! Every random choice is keyed by `(seed, stream, index)` so that results do
//! not depend on the order in which nodes or edges are visited.

use rand::SeedableRng;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// Stream tags. Distinct tags give independent randomness from one seed.
pub mod stream {
    pub const GENERATOR: u64 = 1;
    pub const EDGE_RANK: u64 = 2;
    pub const EDGE_ORDER: u64 = 3;
    pub const COLOR: u64 = 4;
    pub const NODE: u64 = 5;
    pub const ROUND: u64 = 6;
    pub const ORIENTATION: u64 = 7;
    pub const SAMPLING: u64 = 8;
    pub const PHASE: u64 = 9;
    pub const TRIAL: u64 = 10;
    pub const ALGORITHM: u64 = 11;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, stream, index)`.
#[inline]
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let a = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    let b = mix(a ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93));
    mix(b ^ index.wrapping_mul(0xa076_1d64_78bd_642f))
}

/// Cheap generator for a handful of draws per key (one per edge or node).
#[inline]
pub fn keyed(seed: u64, stream: u64, index: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive_seed(seed, stream, index))
}

/// Generator for long draw sequences (permutations, shuffles).
pub fn bulk(seed: u64, stream: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, stream, index))
}
