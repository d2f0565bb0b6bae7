//! Deterministic random streams.
//!
//! Every stream is ChaCha8 (the ChaCha stream cipher with 8 rounds, as
//! specified in RFC 7539 with a reduced round count), keyed from a 64-bit
//! seed via `SeedableRng::seed_from_u64`. Independent sub-streams for
//! concurrent tasks use the ChaCha stream id rather than seed arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream owned by task `index` of a job seeded with `seed`.
pub fn task_rng(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for task `index`, for callers that need to record it.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    task_rng(seed, index).random()
}
