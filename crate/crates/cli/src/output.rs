//! Atomic output files and the run manifest written beside them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// SHA-256 of the canonical JSON configuration below.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

pub struct Context {
    out_dir: PathBuf,
    tag: Option<String>,
}

impl Context {
    pub fn new(out_dir: PathBuf, tag: Option<String>) -> Self {
        Self { out_dir, tag }
    }

    /// Output base name: the `--tag` if given, else `default`.
    pub fn base(&self, default: &str) -> String {
        self.tag.clone().unwrap_or_else(|| default.to_string())
    }

    /// Writes each `(file name, bytes)` atomically, then the manifest
    /// `<base>.manifest.json` naming them.
    pub fn emit(
        &self,
        base: &str,
        config: &impl Serialize,
        seed: Option<u64>,
        files: &[(String, Vec<u8>)],
    ) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out_dir)?;
        for (name, bytes) in files {
            write_atomic(&self.out_dir.join(name), bytes)?;
        }
        let config = serde_json::to_value(config).map_err(|e| Failure::config(e.to_string()))?;
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            config_hash: config_hash(&config),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: files.iter().map(|(n, _)| n.clone()).collect(),
        };
        let path = self.out_dir.join(format!("{base}.manifest.json"));
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| Failure::config(e.to_string()))?;
        text.push(b'\n');
        write_atomic(&path, &text)?;
        Ok(path)
    }
}

/// `serde_json::Value` objects keep keys sorted, so this is canonical.
pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("values serialize");
    hex::encode(Sha256::digest(bytes))
}

/// Write to a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
