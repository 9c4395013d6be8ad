//! Deterministic per-item random substreams.
//!
//! Every Monte Carlo item (a simulated path, a replication) draws from its own
//! ChaCha8 stream selected by `(seed, stream index)`. Because ChaCha is
//! counter-based, the stream for item `i` does not depend on how many items
//! were generated before it or on which worker generates it, so serial and
//! parallel runs agree bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Returns the generator for substream `index` of the experiment keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent experiment seed from a base seed and a label, so
/// that sub-experiments of one run do not share streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
