//! Seeded random streams.
//!
//! Every run owns a single root seed. Independent sub-streams are derived with
//! [`substream`], which selects one of the 2^64 ChaCha stream ids for a given
//! key; a sub-stream depends only on `(seed, stream)`, never on which worker
//! draws from it, so parallel maps over sub-streams are reproducible for any
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type SimRng = ChaCha8Rng;

/// Root stream for `seed`.
pub fn root(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-stream number `stream` of the root seeded with `seed`.
///
/// Stream 0 is reserved for the root itself, so `substream(seed, i)` for
/// `i >= 0` uses ChaCha stream id `i + 1`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_add(1));
    rng
}
