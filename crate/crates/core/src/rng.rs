//! Seeded, counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha20 keystream keyed by a 64-bit
//! seed, with a separate stream id per purpose. Draws therefore do not depend
//! on thread count, platform, or the order in which other streams are used.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream id for the evolution operator.
pub const OPERATOR_STREAM: u64 = 1;
/// Stream id for the initial signal.
pub const SIGNAL_STREAM: u64 = 2;
/// Stream id for Bernoulli sampling masks.
pub const MASK_STREAM: u64 = 3;
const NOISE_STREAM_BASE: u64 = 1 << 32;

/// A generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for the additive noise of observation time `t`.
pub fn noise_stream(t: usize) -> u64 {
    NOISE_STREAM_BASE + t as u64
}
