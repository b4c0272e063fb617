//! Seeded, counter-based random streams.
//!
//! Every stochastic stage draws from a ChaCha8 generator keyed by a 64-bit
//! seed and a stream id. Distinct stream ids never overlap, so datasets,
//! shuffles and initializations can be generated independently (and in any
//! order) without sharing generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used inside the crate. Keeping them in one place prevents two
/// stages from silently consuming the same stream.
pub mod stream {
    pub const LABELS: u64 = 1;
    pub const VOLTAGES: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const INFO_BITS: u64 = 5;
    pub const CODE_CONSTRUCTION: u64 = 6;
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed from a parent seed and a tag (splitmix64 finalizer).
///
/// Used for per-point and per-trial seeds in sweeps so that results do not
/// depend on evaluation order.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    let mut z = parent ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
