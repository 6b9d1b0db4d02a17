//! Report files and the hash manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Writes files into one output directory and records their hashes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    /// Creates the directory; refuses one that already holds a manifest.
    pub fn create(root: &Path) -> Result<Self, CliError> {
        if root.join(MANIFEST).exists() {
            return Err(CliError::Io(format!(
                "{} already holds a manifest; choose a fresh output directory",
                root.display()
            )));
        }
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV with a leading `# ...` comment line describing the columns.
    pub fn write_csv(
        &mut self,
        name: &str,
        comment: &str,
        header: &[String],
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<(), CliError> {
        let mut buf = format!("# {comment}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.iter().map(|x| format_float(*x)))?;
            }
            w.flush()?;
        }
        self.write_bytes(name, &buf)
    }

    /// Writes `manifest.json` last; it is not listed in itself.
    pub fn finish(mut self, experiment: &str, summary: Value) -> Result<Vec<FileEntry>, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = serde_json::json!({
            "schema": "bridgelab.manifest.v1",
            "experiment": experiment,
            "files": self.files,
            "summary": summary,
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(self.files)
    }
}

/// Shortest round-trip representation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path()).unwrap();
        let files = out.finish("spectrum", Value::Null).unwrap();
        assert!(files.is_empty());
        let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["files"].as_array().unwrap().len(), 0);
        assert!(OutputDir::create(dir.path()).is_err());
    }

    #[test]
    fn csv_has_comment_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("e.csv", "energy", &["t".into(), "E_total".into()], vec![vec![0.0, 1.5]])
            .unwrap();
        let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# energy");
        assert_eq!(lines[1], "t,E_total");
        assert_eq!(lines[2], "0e0,1.5e0");
        assert_eq!(out.files()[0].sha256.len(), 64);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
