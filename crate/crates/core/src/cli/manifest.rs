//! Run manifests: the command line, configuration snapshot, seed, version,
//! timestamps, and the content hash of every output file. Re-running with
//! the same inputs and seed reproduces the hashed outputs bitwise (fixed
//! reduction orders make results thread-count independent).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub config: serde_json::Value,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<OutputRecord>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command_line: Vec<String>, seed: Option<u64>, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: "tricomi-lab",
            version: env!("CARGO_PKG_VERSION"),
            command_line,
            seed,
            threads: rayon::current_num_threads(),
            config,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    /// Hash and record an already-written output file.
    pub fn record(&mut self, path: &Path) -> std::io::Result<()> {
        let data = fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&data);
        self.outputs.push(OutputRecord {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    /// Finish and write the manifest next to the outputs.
    pub fn finish(mut self, path: &Path) -> std::io::Result<PathBuf> {
        self.finished_unix_ms = now_ms();
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(path, json)?;
        Ok(path.to_path_buf())
    }
}

/// Write a file and record it in the manifest in one step.
pub fn write_output(
    manifest: &mut RunManifest,
    path: &Path,
    contents: &str,
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    manifest.record(path)
}
