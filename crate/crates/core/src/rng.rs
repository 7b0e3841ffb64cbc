//! Deterministic random streams.
//!
//! Every stochastic task draws from its own ChaCha20 stream whose 256-bit key
//! is `SHA-256(master_seed_le || tag || 0x00 || index_0_le || index_1_le ...)`.
//! A task's output therefore depends only on `(master_seed, tag, indices)` and
//! never on how tasks are scheduled across worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// The generator used for every stream in the toolkit.
pub type StreamRng = ChaCha20Rng;

/// Derives the key for the stream `(master, tag, index)`.
pub fn stream_key(master: u64, tag: &str, index: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update([0u8]);
    for i in index {
        hasher.update(i.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Opens the stream `(master, tag, index)`.
pub fn stream(master: u64, tag: &str, index: &[u64]) -> StreamRng {
    ChaCha20Rng::from_seed(stream_key(master, tag, index))
}

/// Draws a fresh master seed from a caller-supplied generator, for APIs that
/// accept `&mut impl Rng` but fan out into parallel sub-streams.
pub fn fork_seed<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
