//! Run manifest: artifact hashes, resolved config and versions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("brownent".to_string(), brownent::VERSION.to_string()),
        ("brownent-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ])
}

impl Manifest {
    /// Hashes `files` (relative to `out`) and embeds the resolved config.
    pub fn build(
        out: &Path,
        command: &str,
        seed: u64,
        config: serde_json::Value,
        files: &[PathBuf],
    ) -> Result<Self, CliError> {
        let canonical = serde_json::to_vec(&config).expect("json value serialises");
        let mut artifacts = Vec::with_capacity(files.len());
        for rel in files {
            let (sha256, bytes) = hash_file(&out.join(rel))?;
            artifacts.push(Artifact { path: rel.to_string_lossy().replace('\\', "/"), sha256, bytes });
        }
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(Self {
            command: command.to_string(),
            seed,
            config_sha256: sha256_hex(&canonical),
            versions: versions(),
            config,
            artifacts,
        })
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        brownent::io::write_json(&out.join(MANIFEST_NAME), self)?;
        Ok(())
    }

    pub fn read(out: &Path) -> Result<Self, CliError> {
        Ok(brownent::io::read_json(&out.join(MANIFEST_NAME))?)
    }

    /// Artifacts whose current content no longer matches the recorded hash.
    pub fn verify(&self, out: &Path) -> Vec<String> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            match hash_file(&out.join(&a.path)) {
                Ok((h, n)) if h == a.sha256 && n == a.bytes => {}
                Ok(_) => bad.push(format!("{}: hash mismatch", a.path)),
                Err(e) => bad.push(format!("{}: {e}", a.path)),
            }
        }
        bad
    }
}
