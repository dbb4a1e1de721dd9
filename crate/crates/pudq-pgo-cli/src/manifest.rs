//! Run manifests: every command records its configuration, seeds, inputs,
//! outputs, timing, and summary metrics next to its outputs, atomically.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timing_ms: u128,
    pub exit_status: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timing_ms: 0,
            exit_status: 0,
            metrics: None,
        }
    }

    /// Write via a temp file and rename so readers never observe a partial
    /// manifest.
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}
