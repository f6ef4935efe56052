//! Output files. Every data file gets a `<name>.meta.json` sidecar carrying
//! the resolved run config, and every byte written is digested for the
//! manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

pub struct OutputDir {
    root: PathBuf,
    experiment: String,
    config: Value,
    files: Vec<OutputDigest>,
}

pub fn sidecar_name(file: &str) -> String {
    format!("{file}.meta.json")
}

impl OutputDir {
    pub fn create(root: &Path, experiment: &str, config: Value) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            experiment: experiment.to_string(),
            config,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(OutputDigest {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn write_sidecar(&mut self, name: &str, extra: Value) -> Result<()> {
        let mut meta = json!({
            "file": name,
            "experiment": self.experiment,
            "config": self.config,
        });
        if let Value::Object(map) = extra {
            for (k, v) in map {
                meta[k] = v;
            }
        }
        self.write_bytes(&sidecar_name(name), &pretty(&meta)?)
    }

    /// CSV with a header row, `,` separators and `\n` line endings.
    pub fn csv<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
        extra: Value,
    ) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Format {
            path: self.root.join(name),
            message: e.to_string(),
        };
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.serialize(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Format {
            path: self.root.join(name),
            message: e.to_string(),
        })?;
        self.write_bytes(name, &bytes)?;
        let mut extra = extra;
        if extra.is_null() {
            extra = json!({});
        }
        extra["columns"] = json!(header);
        self.write_sidecar(name, extra)
    }

    /// One JSON value per line.
    pub fn jsonl<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>, extra: Value) -> Result<()> {
        let mut bytes = Vec::new();
        for row in rows {
            serde_json::to_writer(&mut bytes, &row).map_err(|e| CliError::Format {
                path: self.root.join(name),
                message: e.to_string(),
            })?;
            bytes.push(b'\n');
        }
        self.write_bytes(name, &bytes)?;
        self.write_sidecar(name, extra)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T, extra: Value) -> Result<()> {
        let value = serde_json::to_value(value).map_err(|e| CliError::Format {
            path: self.root.join(name),
            message: e.to_string(),
        })?;
        let bytes = pretty(&value)?;
        self.write_bytes(name, &bytes)?;
        self.write_sidecar(name, extra)
    }

    pub fn finish(self) -> Vec<OutputDigest> {
        self.files
    }
}

pub fn pretty(value: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_come_with_sidecars_and_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), "demo", json!({"x": 1})).unwrap();
        out.csv("t.csv", &["a", "b"], [(1.5, 2u32), (0.25, 3)], Value::Null)
            .unwrap();
        out.jsonl("s.jsonl", [vec![0.5, 1.0]], json!({"note": "n"})).unwrap();
        let files = out.finish();
        let names: Vec<&str> = files.iter().map(|f| f.file.as_str()).collect();
        assert_eq!(names, ["t.csv", "t.csv.meta.json", "s.jsonl", "s.jsonl.meta.json"]);
        let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(csv, "a,b\n1.5,2\n0.25,3\n");
        let meta: Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("s.jsonl.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["config"]["x"], 1);
        assert_eq!(meta["note"], "n");
        assert_eq!(files[0].sha256.len(), 64);
    }
}
