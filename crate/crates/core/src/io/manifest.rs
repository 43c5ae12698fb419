use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Sidecar written next to every output so a run can be repeated exactly.
/// It holds no timestamps, so repeated runs produce identical sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub flags: serde_json::Value,
    pub seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, argv: Vec<String>, flags: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv,
            flags,
            seeds: Vec::new(),
            threads: None,
            outputs: Vec::new(),
        }
    }

    /// `out.csv` gets `out.csv.manifest.json`.
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    /// Writes one sidecar per recorded output.
    pub fn write_sidecars(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        for out in &self.outputs {
            std::fs::write(Self::sidecar_path(out), &text)?;
        }
        Ok(())
    }
}
