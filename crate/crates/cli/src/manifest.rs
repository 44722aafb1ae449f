//! Provenance record written next to every output file.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario_path: String,
    /// SHA-256 of the scenario file bytes, hex encoded.
    pub scenario_sha256: String,
    /// Every option that influences the output, after defaults were applied.
    pub options: serde_json::Value,
    pub seeds: Vec<u64>,
    /// Thread cap; outputs do not depend on it.
    pub threads: Option<usize>,
    /// Seconds since the Unix epoch when the run started.
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        scenario_path: &Path,
        scenario_text: &str,
        options: serde_json::Value,
        seeds: Vec<u64>,
        threads: Option<usize>,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario_path: scenario_path.display().to_string(),
            scenario_sha256: sha256_hex(scenario_text.as_bytes()),
            options,
            seeds,
            threads,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
