//! JSON report envelope shared by every CLI command.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Provenance attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub tool_version: String,
    /// Only recorded on request, since it breaks byte-identical reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64, inputs: Vec<InputDigest>) -> Self {
        RunManifest {
            command: command.to_owned(),
            config,
            seed,
            inputs,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_ms: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(manifest: RunManifest, body: T) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            manifest,
            body,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
