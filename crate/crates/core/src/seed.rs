//! Deterministic seed derivation.
//!
//! Every random stream of an experiment is seeded from the base seed through
//! a chain of SplitMix64 finalizers, so that a run's streams depend only on
//! `(base seed, stream tag, run index)` and never on scheduling order.

/// SplitMix64 increment.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Tag of the environment (reward) streams.
pub const ENV_TAG: u64 = 0xE0E0_0000_0000_0001;
/// Tag of the queue arrival streams.
pub const ARRIVAL_TAG: u64 = 0xA77A_0000_0000_0002;
/// Tag of the queue service streams.
pub const SERVICE_TAG: u64 = 0x5E7C_0000_0000_0003;

/// SplitMix64 output function applied to `z + GOLDEN_GAMMA`.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix(base, a, b) = splitmix64(splitmix64(splitmix64(base) ^ a) ^ b)`.
pub fn mix(base: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ a) ^ b)
}
