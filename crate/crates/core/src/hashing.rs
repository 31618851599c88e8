//! Short content hashes used to tag output files with the configuration
//! that produced them.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First 16 hex digits of SHA-256 over the compact JSON form of `value`.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes to JSON");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
