//! Seed derivation for reproducible experiments.
//!
//! All randomness flows through SplitMix64, a named, portable generator with
//! 64 bits of state: identical seeds give identical streams on every
//! platform. Trials split as seed + trial_index; the system draw and the
//! data draw run on domain-separated streams so reusing one seed for both
//! cannot correlate them.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

const SYSTEM_STREAM: u64 = 0x53_59_53_54_45_4d_5f_31;
const DATA_STREAM: u64 = 0x44_41_54_41_5f_30_30_31;

pub(crate) fn system_stream(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ SYSTEM_STREAM)
}

pub(crate) fn data_stream(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ DATA_STREAM)
}
