//! Artifact writing and provenance records.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use attwarp_core::atw::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// File stem used to name a per-input artifact group.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into())
}

/// Rejects batches where two inputs would write to the same artifact names.
pub fn check_unique_stems<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    let mut seen = std::collections::BTreeMap::new();
    for p in paths {
        if let Some(prev) = seen.insert(stem(p), p) {
            anyhow::bail!(
                "{} and {} would write the same output names",
                prev.display(),
                p.display()
            );
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn hash(role: &str, path: &Path) -> Result<Self> {
        Ok(Self {
            role: role.into(),
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// What produced a set of artifacts. Holds no timestamps, so reruns with the
/// same inputs write identical records.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputRecord>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Provenance {
    pub fn new(command: &'static str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: Vec::new(),
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        })
    }

    pub fn input(mut self, role: &str, path: &Path) -> Result<Self> {
        self.inputs.push(InputRecord::hash(role, path)?);
        Ok(self)
    }

    pub fn output(mut self, path: &Path) -> Self {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.outputs.push(name);
        self
    }
}
