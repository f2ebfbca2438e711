//! Canonical serialization and content digests.
//!
//! The canonical form is compact JSON with every object's keys in
//! lexicographic order. Values pass through `serde_json::Value`, whose map
//! is ordered, so struct field order and map insertion order never reach
//! the output. Nothing here may carry a float, a timestamp, or a locale.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Canonical bytes of any serializable domain value.
pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let tree = serde_json::to_value(value).expect("domain values always serialize to JSON");
    serde_json::to_vec(&tree).expect("JSON value always encodes")
}

/// Canonical form as a UTF-8 string.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    String::from_utf8(to_canonical_bytes(value)).expect("serde_json emits UTF-8")
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical form of `value`.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    sha256_hex(&to_canonical_bytes(value))
}
