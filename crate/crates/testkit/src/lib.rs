//! Test support for the workspace: seeded input generators and independent
//! brute-force oracles. Dev-dependency only; nothing here ships.

pub mod check;
pub mod gen;
pub mod oracle;
pub mod walking;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The workspace's reproducible RNG.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
