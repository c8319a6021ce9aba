//! 64-bit content digests (truncated SHA-256) for drift and corruption checks.

use sha2::{Digest, Sha256};

pub fn digest64(bytes: &[u8]) -> u64 {
    let full = Sha256::digest(bytes);
    u64::from_be_bytes(full[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn digest64_hex(bytes: &[u8]) -> String {
    format!("{:016x}", digest64(bytes))
}
