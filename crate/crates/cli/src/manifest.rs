//! Run manifests: the resolved configuration and provenance of every output.
//!
//! Each output file `<out>` gets a sibling `<out>.manifest.json`. Rerunning
//! the recorded command with the recorded seed and thread count reproduces
//! the output byte for byte; only the timestamps differ.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::io::write_json;
use crate::CliResult;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Fully resolved configuration (flags merged over any config file).
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    threads: Option<usize>,
    config: serde_json::Value,
    started_at: chrono::DateTime<chrono::Utc>,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, threads: Option<usize>, config: serde_json::Value) -> Self {
        ManifestBuilder {
            command: command.to_owned(),
            seed,
            threads,
            config,
            started_at: chrono::Utc::now(),
        }
    }

    /// Writes `<out>.manifest.json` next to the named outputs.
    pub fn write(self, primary_out: &Path, outputs: &[PathBuf]) -> CliResult<()> {
        let manifest = RunManifest {
            artifact: "grasswalk",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            threads: self.threads,
            config: self.config,
            started_at: self.started_at.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let mut path = primary_out.as_os_str().to_owned();
        path.push(".manifest.json");
        write_json(Path::new(&path), &manifest)
    }
}
