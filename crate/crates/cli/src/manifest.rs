//! Run manifests: what was run, on which inputs, producing which outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{CmdResult, OrFail};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Not covered by the reproducibility contract.
    pub created_unix_s: u64,
}

pub fn digest(path: &Path) -> CmdResult<FileDigest> {
    let bytes = std::fs::read(path).or_fail(format!("cannot read {}", path.display()))?;
    Ok(FileDigest {
        path: path.to_string_lossy().replace('\\', "/"),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: &impl Serialize) -> Self {
        Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: Vec::new(),
            outputs: Vec::new(),
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn inputs<'a>(mut self, paths: impl IntoIterator<Item = &'a Path>) -> CmdResult<Self> {
        for p in paths {
            self.inputs.push(digest(p)?);
        }
        Ok(self)
    }

    pub fn outputs<'a>(mut self, paths: impl IntoIterator<Item = &'a Path>) -> CmdResult<Self> {
        for p in paths {
            self.outputs.push(digest(p)?);
        }
        Ok(self)
    }

    /// Writes the manifest to `path`.
    pub fn write(&self, path: &Path) -> CmdResult<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n").or_fail(format!("cannot write {}", path.display()))
    }
}

/// `<out>.manifest.json` next to a single-file output.
pub fn beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
