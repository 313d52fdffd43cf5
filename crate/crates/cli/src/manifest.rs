//! Run manifests: one JSON record written next to every command's outputs.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CODE_VERSION: &str = concat!("neuralpt ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved job configuration; feeding it back reproduces the run.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub code_version: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    /// Decodes the stored job, checking it belongs to `command`.
    pub fn job<T: DeserializeOwned>(&self, command: &str, path: &Path) -> Result<T> {
        if self.command != command {
            return Err(CliError::Config(format!(
                "{} is a '{}' manifest, not '{command}'",
                path.display(),
                self.command
            )));
        }
        serde_json::from_value(self.config.clone()).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `out.pfm` -> `out.pfm.manifest.json`; keeping the extension stops runs
/// that share a stem from overwriting each other's manifests.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_the_output() {
        assert_eq!(manifest_path(Path::new("runs/a.pfm")), PathBuf::from("runs/a.pfm.manifest.json"));
        assert_ne!(manifest_path(Path::new("a.csv")), manifest_path(Path::new("a.sblob")));
    }
}
