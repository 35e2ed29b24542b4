//! Seeded random streams.
//!
//! Every party draws from its own ChaCha stream so that adding or removing
//! draws in one party (for example an attacker) never shifts the draws of
//! another. Streams are keyed by `(seed, Stream)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Center = 1,
    Alice = 2,
    Bob = 3,
    Channel = 4,
    Eve = 5,
    /// Public randomness: block shuffles and hash seeds.
    Public = 6,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for item `index` of a run seeded with `parent`:
/// `splitmix64(parent ^ splitmix64(index + 1))`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(1)))
}
