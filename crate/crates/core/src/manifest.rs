//! Run manifests: what produced an artifact, from which inputs, with which
//! seed. Written next to each output as `<output>.manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of each input file, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects manifest fields over the course of a run.
#[derive(Debug)]
pub struct ManifestBuilder {
    subcommand: String,
    seed: u64,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    started: Instant,
    started_unix: f64,
}

impl ManifestBuilder {
    pub fn start(subcommand: &str, seed: u64) -> Self {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            subcommand: subcommand.to_string(),
            seed,
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
            started: Instant::now(),
            started_unix,
        }
    }

    pub fn config<T: Serialize>(&mut self, config: &T) -> Result<&mut Self> {
        self.config = serde_json::to_value(config)?;
        Ok(self)
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs
            .insert(path.display().to_string(), file_digest(path)?);
        Ok(self)
    }

    pub fn finish(&self, artifacts: &[PathBuf]) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.clone(),
            config: self.config.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: self.inputs.clone(),
            artifacts: artifacts.iter().map(|p| p.display().to_string()).collect(),
            started_unix_seconds: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// `<primary>.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the manifest for `artifacts` next to the first of them.
pub fn write_manifest(builder: &ManifestBuilder, artifacts: &[PathBuf]) -> Result<PathBuf> {
    let path = manifest_path(&artifacts[0]);
    let m = builder.finish(artifacts);
    std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(path)
}
