//! Stable hashing used to derive seeds and stub outputs.
//!
//! `std::hash` makes no cross-version stability promise, so everything that
//! must be reproducible on disk goes through SHA-256.

use sha2::{Digest, Sha256};

/// Hashes a sequence of byte strings into a `u64`. Parts are length-prefixed
/// so `["ab", "c"]` and `["a", "bc"]` differ.
pub fn hash64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest is 32 bytes"))
}

pub fn derive(seed: u64, label: &str) -> u64 {
    hash64(&[&seed.to_le_bytes(), label.as_bytes()])
}
