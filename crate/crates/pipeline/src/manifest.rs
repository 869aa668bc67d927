use ndarray::Array2;
use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use biphoton_core::io;

use crate::config::hex;
use crate::error::{PipelineError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub post_selection: Option<usize>,
    pub sha256: String,
}

/// Index of every file a run produced, with hashes and stage timings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub scenario: String,
    pub config_hash: String,
    pub post_selections: usize,
    pub files: Vec<FileEntry>,
    /// Wall-clock seconds per stage. Not part of the content hash.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(scenario: &str, config_hash: String, post_selections: usize) -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            scenario: scenario.into(),
            config_hash,
            post_selections,
            files: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Adds entries, replacing any with the same path, and keeps paths sorted.
    pub fn extend(&mut self, entries: impl IntoIterator<Item = FileEntry>) {
        for e in entries {
            self.files.retain(|f| f.path != e.path);
            self.files.push(e);
        }
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
    }

    pub fn find(&self, kind: &str, post_selection: Option<usize>) -> Option<&FileEntry> {
        self.files
            .iter()
            .find(|f| f.kind == kind && f.post_selection == post_selection)
    }

    /// SHA-256 over the config hash and every file hash, in path order.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.config_hash.as_bytes());
        for f in &self.files {
            h.update(format!("\n{} {}", f.path, f.sha256).as_bytes());
        }
        hex(&h.finalize())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        read_json("manifest", &dir.join(MANIFEST_FILE))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| PipelineError::io("manifest", &path, e))
    }

    /// Every listed file exists and still has its recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for f in &self.files {
            let path = dir.join(&f.path);
            let bytes = std::fs::read(&path).map_err(|e| PipelineError::io("manifest", &path, e))?;
            if sha256(&bytes) != f.sha256 {
                return Err(PipelineError::io("manifest", &path, "content differs from the recorded hash"));
            }
        }
        Ok(())
    }
}

pub fn sha256(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn read_json<T: DeserializeOwned>(stage: &str, path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(stage, path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::io(stage, path, format!("malformed JSON: {e}")))
}

/// Writes files under a run directory and records their entries.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
    pub stage: &'static str,
}

impl RunDir {
    pub fn new(root: &Path, stage: &'static str) -> Self {
        RunDir {
            root: root.to_path_buf(),
            stage,
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_bytes(&self, rel: &str, kind: &str, post_selection: Option<usize>, bytes: &[u8]) -> Result<FileEntry> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(self.stage, parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| PipelineError::io(self.stage, &path, e))?;
        Ok(FileEntry {
            path: rel.to_string(),
            kind: kind.to_string(),
            post_selection,
            sha256: sha256(bytes),
        })
    }

    pub fn write_real(&self, rel: &str, kind: &str, ps: Option<usize>, values: &Array2<f64>) -> Result<FileEntry> {
        self.write_bytes(rel, kind, ps, &io::encode_real(values))
    }

    pub fn write_complex(&self, rel: &str, kind: &str, ps: Option<usize>, values: &Array2<Complex64>) -> Result<FileEntry> {
        self.write_bytes(rel, kind, ps, &io::encode_complex(values))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, kind: &str, ps: Option<usize>, value: &T) -> Result<FileEntry> {
        let text = serde_json::to_string_pretty(value).expect("sidecar serializes");
        self.write_bytes(rel, kind, ps, text.as_bytes())
    }

    pub fn read_real(&self, rel: &str) -> Result<Array2<f64>> {
        let path = self.path(rel);
        io::read_real(&path).map_err(|e| PipelineError::core(self.stage, path.display(), e))
    }

    pub fn read_complex(&self, rel: &str) -> Result<Array2<Complex64>> {
        let path = self.path(rel);
        io::read_complex(&path).map_err(|e| PipelineError::core(self.stage, path.display(), e))
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T> {
        read_json(self.stage, &self.path(rel))
    }
}

/// Directory name of post-selection `k`.
pub fn ps_dir(k: usize) -> String {
    format!("ps{k:02}")
}
