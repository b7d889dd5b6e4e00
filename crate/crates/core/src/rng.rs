//! Seed derivation for reproducible Monte Carlo.
//!
//! Every trial gets its own ChaCha8 stream keyed by `(root seed, trial index)`,
//! so results never depend on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for trial `index` under `root`.
pub fn trial_rng(root: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng
}

/// Mixes a purpose tag into a root seed (SplitMix64 finaliser), so that e.g.
/// label assignment and noise draws never share a stream.
pub fn derive_seed(root: u64, tag: u64) -> u64 {
    let mut z = root ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
