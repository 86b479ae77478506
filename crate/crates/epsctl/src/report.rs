//! Self-contained run reports: command echo, input digest, software
//! version, RNG identifier, seed, results, and wall-clock duration.

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub input_digest: String,
    pub version: String,
    pub rng: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: serde_json::Value,
    pub duration_ms: f64,
}

impl RunReport {
    pub fn new(command: String, input: &[u8], seed: Option<u64>) -> Self {
        Self {
            command,
            input_digest: format!("fnv1a64:{:016x}", fnv1a64(input)),
            version: VERSION.to_string(),
            rng: epskit::RNG_ID.to_string(),
            seed,
            results: serde_json::Value::Null,
            duration_ms: 0.0,
        }
    }
}

/// FNV-1a 64-bit content hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
