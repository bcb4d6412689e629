//! Input generators shared by the benches.

use chainstamp::{sha256, Digest32};

/// `n` distinct digests, reproducible across runs.
pub fn digests(n: usize) -> Vec<Digest32> {
    (0..n as u64).map(|i| sha256(&i.to_le_bytes())).collect()
}

pub fn payload(len: usize) -> Vec<u8> {
    (0..len)
        .map(|i| (i.wrapping_mul(31) ^ (i >> 8)) as u8)
        .collect()
}
