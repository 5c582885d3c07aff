//! Run manifest: a JSON record of what produced the artifacts in an output
//! directory, written last so its presence marks a completed run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub created_utc: String,
    /// The fully resolved configuration, overrides included.
    pub config: BTreeMap<String, String>,
    /// Artifact paths relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, artifacts: Vec<String>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: chrono::Utc::now().to_rfc3339(),
            config,
            artifacts,
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> CliResult<()> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::runtime(format!("cannot serialize manifest: {e}")))?;
    fs::write(path, json + "\n")
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}
