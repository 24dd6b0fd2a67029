//! Run manifests: the provenance record every command writes.
//!
//! A manifest pins everything needed to reproduce a run — the resolved
//! configuration, input files, the seed, tool versions — plus the names of
//! the artifacts it produced and any error. The wall-clock timestamp lives
//! only here, so artifact files themselves stay byte-identical across
//! reruns of the same configuration.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Versions of the binary and the library that produced a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
    pub library_version: String,
}

/// One input file consumed by a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputRecord {
    /// What the file was used as (`attempt_log`, `fitted_distribution`, …).
    pub role: String,
    pub path: String,
    /// Input schema, for attempt logs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

/// The provenance record written as `manifest.json` by every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub command: String,
    /// Wall-clock time of the run; the only non-reproducible field.
    pub created_unix_seconds: u64,
    pub seed: u64,
    /// Resolved command configuration (defaults filled in).
    pub config: Value,
    pub inputs: Vec<InputRecord>,
    /// Artifact file names written into the output directory.
    pub artifacts: Vec<String>,
    /// Non-fatal findings (validation notes, skipped problems, …).
    pub warnings: Vec<String>,
    /// Fatal error, mirrored from the process exit status.
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: Value, inputs: Vec<InputRecord>) -> Self {
        Self {
            tool: ToolInfo {
                name: "passlaw".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                library_version: passlaw::VERSION.into(),
            },
            command: command.into(),
            created_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_secs(),
            seed,
            config,
            inputs,
            artifacts: Vec::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    /// Serialize to pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        text.push('\n');
        text
    }

    /// Write `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::write(dir.join("manifest.json"), self.to_json())
    }
}
