//! Seeded randomness.
//!
//! Every experiment takes one `u64` seed. Stages draw from separate ChaCha
//! streams so adding draws in one stage never shifts another. Per-sample
//! generators are derived from `(seed, stage, index)` so samples can be
//! produced in parallel without changing their values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named sub-streams of a run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Codewords = 1,
    ControlSets = 2,
    Pairs = 3,
    PhaseSets = 4,
    Attack = 5,
}

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based hash of `(seed, key)`.
#[inline]
pub fn mix(seed: u64, key: u64) -> u64 {
    splitmix64(seed ^ splitmix64(key ^ 0x6A09_E667_F3BC_C909))
}

/// Membership test `hash(seed, key) < p`, deterministic in its inputs.
#[inline]
pub fn bernoulli(seed: u64, key: u64, p: f64) -> bool {
    if p >= 1.0 {
        return true;
    }
    if p <= 0.0 {
        return false;
    }
    let threshold = (p * 18_446_744_073_709_551_616.0) as u64;
    mix(seed, key) < threshold
}

pub fn stream(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

pub fn substream(seed: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, index));
    rng.set_stream(stage as u64);
    rng
}
