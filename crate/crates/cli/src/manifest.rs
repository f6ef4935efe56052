use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{pretty, OutputDigest};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Everything needed to regenerate a run's data files. Timestamps and the
/// worker count are informational and do not affect any output byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: RunConfig,
    pub seed: u64,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    pub workers: usize,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let value = serde_json::to_value(self).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        std::fs::write(&path, pretty(&value)?).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Files whose digest differs from `other`, or that only one side has.
    pub fn differing_outputs(&self, other: &RunManifest) -> Vec<String> {
        let mut diff: Vec<String> = self
            .outputs
            .iter()
            .filter(|o| !other.outputs.contains(o))
            .map(|o| o.file.clone())
            .collect();
        for o in &other.outputs {
            if !self.outputs.iter().any(|p| p.file == o.file) {
                diff.push(o.file.clone());
            }
        }
        diff.sort();
        diff.dedup();
        diff
    }
}
