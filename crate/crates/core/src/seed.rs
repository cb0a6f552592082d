//! Deterministic RNG stream derivation.
//!
//! Every randomized routine in this crate takes its randomness from a
//! stream derived from `(master_seed, task_id, replication_index)`.
//! The derivation is a pure integer mix, so the same triple yields the
//! same stream on every platform, and replications can run in parallel
//! without sharing RNG state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stable task identifiers, so stream derivation does not depend on
/// call order.
pub mod task {
    pub const MONTE_CARLO_REVENUE: u64 = 1;
    pub const STAKE_SIMULATION: u64 = 2;
    pub const POSITIVITY_SWEEP: u64 = 3;
    pub const PROPERTY_SWEEP: u64 = 4;
    pub const MULTI_START: u64 = 5;
    pub const LIMIT_DISTRIBUTION: u64 = 6;
    pub const STAKE_SELECTION: u64 = 7;
    pub const STAKE_REWARD: u64 = 8;
    pub const VARIANCE_PATHS: u64 = 9;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Derive the RNG stream for `(task_id, replication)`.
    pub fn stream(&self, task_id: u64, replication: u64) -> ChaCha8Rng {
        derive_rng(self.master_seed, task_id, replication)
    }
}

/// splitmix64 finalizer; a well-distributed 64-bit mix.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministically expand `(master, task, replication)` into a ChaCha8 seed.
pub fn derive_rng(master_seed: u64, task_id: u64, replication: u64) -> ChaCha8Rng {
    let mut state = master_seed
        ^ task_id.wrapping_mul(0xa076_1d64_78bd_642f)
        ^ replication.wrapping_mul(0xe703_7ed1_a0b4_28db);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
