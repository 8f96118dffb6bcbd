//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`.
//! Child seeds are the first eight bytes (little endian) of
//! `SHA-256(global_seed_le || 0x1f || model_id || 0x1f || approach || 0x1f || run_le)`,
//! so adding or removing a model never shifts the seeds of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_seed(global_seed: u64, model_id: &str, approach: &str, run_index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(model_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(approach.as_bytes());
    hasher.update([0x1f]);
    hasher.update(run_index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed for the `run`-th repetition of a stochastic fit seeded with `seed`.
pub(crate) fn run_seed(seed: u64, run: usize) -> u64 {
    child_seed(seed, "", "run", run as u64)
}
