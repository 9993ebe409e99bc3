//! Run records: one JSON object per line, checksummed so that a replay can
//! detect edits to the stored config or payload.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = concat!("fpplab ", env!("CARGO_PKG_VERSION"));

/// The checksummed part of a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub version: String,
    /// `{"subcommand", "seed", "params"}`; enough to rerun the experiment.
    pub config: Value,
    pub seed_schedule: Value,
    pub payload: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub body: Body,
    pub wall_time_s: f64,
    pub checksum: String,
}

pub fn seed_schedule(seed: u64) -> Value {
    json!({
        "master_seed": seed,
        "replica_stream": "ChaCha8 seeded with splitmix64(master_seed + (i + 1) * 0x9E3779B97F4A7C15)",
    })
}

/// SHA-256 of the body serialized compactly with object keys sorted.
pub fn checksum(body: &Body) -> String {
    let canonical = serde_json::to_value(body).expect("values serialize");
    let bytes = serde_json::to_vec(&canonical).expect("values serialize");
    format!("{:x}", Sha256::digest(bytes))
}

impl RunRecord {
    pub fn new(body: Body, wall_time_s: f64) -> Self {
        let checksum = checksum(&body);
        RunRecord { body, wall_time_s, checksum }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("values serialize")
    }
}
