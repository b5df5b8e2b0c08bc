//! Per-frame RNG seed derivation.
//!
//! Each frame's random stream is derived from (global seed, frame id), so
//! per-frame results are independent of worker count and processing order.

use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a 256-bit seed from the global seed and a frame id.
pub fn derive_frame_seed(global_seed: u64, frame_id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(frame_id.as_bytes());
    hasher.finalize().into()
}

/// A counter-based RNG for one frame's processing.
pub fn frame_rng(global_seed: u64, frame_id: &str) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::from_seed(derive_frame_seed(global_seed, frame_id))
}
