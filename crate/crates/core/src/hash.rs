//! Seeded non-cryptographic hashing used across the sketches and dedup.
//!
//! Every analysis that hashes strings takes an explicit 64-bit seed so a run
//! can be repeated with a different seed to detect hash collisions (two runs
//! disagreeing on any reported count is collision evidence).

use xxhash_rust::xxh3::{xxh3_128_with_seed, xxh3_64_with_seed};

/// 64-bit seeded hash of a rendered n-gram or token string.
#[inline]
pub fn hash64(bytes: &[u8], seed: u64) -> u64 {
    xxh3_64_with_seed(bytes, seed)
}

/// 128-bit seeded hash for whole-document and URL dedup. The full digest is
/// kept; truncating it would weaken the collision-check protocol.
#[inline]
pub fn hash128(bytes: &[u8], seed: u64) -> u128 {
    xxh3_128_with_seed(bytes, seed)
}

/// Stable hex digest of a list of config strings, used for report headers.
pub fn config_hash(parts: &[&str]) -> String {
    let mut buf = Vec::new();
    for p in parts {
        buf.extend_from_slice(p.as_bytes());
        buf.push(0x1f); // unit separator keeps ["ab","c"] != ["a","bc"]
    }
    format!("{:016x}", hash64(&buf, 0))
}
