//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`TrialRng`], a SplitMix64
//! generator. Seeds for sub-streams (per trial, per party, per stage) are
//! derived with [`derive_seed`]:
//!
//! ```text
//! derive_seed(master, [a, b, ...]) = fold(master, |s, x| splitmix64(s ^ x).next_u64())
//! ```
//!
//! so a given master seed reproduces the same stream on every platform.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub type TrialRng = SplitMix64;

/// Labels for the sub-streams used by the protocol runners. Fixed values so
/// that traces stay stable across releases.
pub mod stream {
    pub const TRIAL: u64 = 0x7472_6961_6c00_0001;
    pub const VERIFIER: u64 = 0x7665_7269_6600_0002;
    pub const PROVER: u64 = 0x7072_6f76_6500_0003;
    pub const ADVERSARY: u64 = 0x6164_7665_7200_0004;
    pub const ORACLE: u64 = 0x6f72_6163_6c00_0005;
    pub const TAPE: u64 = 0x7461_7065_0000_0006;
    pub const STAGE: u64 = 0x7374_6167_6500_0007;
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(master, |s, &x| SplitMix64::seed_from_u64(s ^ x).next_u64())
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, path: &[u64]) -> TrialRng {
    rng_from_seed(derive_seed(master, path))
}

/// Seed of trial `index` under a master seed.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, &[stream::TRIAL, index])
}
