//! Provenance record written next to every run's outputs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex digits of the config hash embedded in output file names.
pub const HASH_LEN: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix: f64,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub config_hash: String,
    pub version: String,
    /// Recorded only on request so that reruns stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<WallClock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, config: &T) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        Ok(Self {
            command: command.to_string(),
            config_hash: hash_value(&config),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock: None,
            seed: None,
            outputs: Vec::new(),
        })
    }
}

/// Truncated SHA-256 of the canonical JSON form (object keys sorted).
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    Ok(hash_value(&serde_json::to_value(config)?))
}

fn hash_value(value: &Value) -> String {
    // serde_json's default map is ordered, so this encoding is canonical
    let digest = Sha256::digest(value.to_string().as_bytes());
    let mut out = String::with_capacity(HASH_LEN);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
        if out.len() >= HASH_LEN {
            break;
        }
    }
    out.truncate(HASH_LEN);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn hash_ignores_key_order_and_tracks_values() {
        let a = json!({"x": 1, "y": [1.5, 2]});
        let b: Value = serde_json::from_str(r#"{"y": [1.5, 2], "x": 1}"#).unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_ne!(config_hash(&a).unwrap(), config_hash(&json!({"x": 2, "y": [1.5, 2]})).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), HASH_LEN);
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = RunManifest::new("kernel", &json!({"range": 12.0})).unwrap();
        m.outputs.push("kernel_abc.csv".into());
        let text = serde_json::to_string(&m).unwrap();
        assert!(!text.contains("wall_clock"));
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
