//! Run manifests: resolved configuration, seed, code version, and a digest
//! inventory of produced files. The manifest is written last, so its
//! presence marks a complete run.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    /// Deterministic id from (command, seed, resolved config).
    pub run_id: String,
    /// Wall-clock timestamp; excluded from replay comparisons.
    pub created_unix_ms: u64,
    pub command: String,
    pub master_seed: u64,
    pub code_version: String,
    /// Fully resolved configuration document.
    pub config: Value,
    pub defaulted_fields: Vec<String>,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, config: Value, defaulted: Vec<String>) -> Self {
        let identity = format!(
            "{command}\n{master_seed}\n{}",
            serde_json::to_string(&config).expect("config serializes")
        );
        let run_id = sha256_hex(identity.as_bytes())[..16].to_string();
        RunManifest {
            run_id,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            command: command.to_string(),
            master_seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            defaulted_fields: defaulted,
            files: Vec::new(),
        }
    }

    /// Record a produced file (path is taken relative to `dir`).
    pub fn record_file(&mut self, dir: &Path, name: &str) -> Result<()> {
        let full = dir.join(name);
        let bytes = fs::read(&full)?;
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Write the manifest itself (always last).
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("manifest encode: {e}")))?;
        write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest decode: {e}")))
}

/// Write via a temp file and atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy())
            .unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
