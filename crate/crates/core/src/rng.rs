//! Seed derivation. Each consumer gets its own ChaCha stream so that, for
//! example, batch shuffling and sampling decisions never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 1,
    Init = 2,
    Shuffle = 3,
    Sampling = 4,
    Noise = 5,
    Trial = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for trial `index` of an experiment seeded by `seed`; results do
/// not depend on the order in which trials are evaluated.
pub fn trial_rng(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(Stream::Trial as u64);
    rng
}
