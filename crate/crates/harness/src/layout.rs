//! Output directory layout.
//!
//! ```text
//! <out>/data/<split>.json, <split>.f32   dataset containers
//! <out>/models/<model>.bin               trained networks
//! <out>/models/base.json                 fitted BASE classifier
//! <out>/models/training.json             per-epoch training losses
//! <out>/detection.csv                    precision/recall per model and split
//! <out>/attributions/strata.json         explained signal indices
//! <out>/attributions/<model>_<method>_<stratum>.json
//! <out>/attributions/time_domain_demo.json
//! <out>/alignment.csv, alignment.json    global alignment reports
//! <out>/summary.json, summary.txt
//! <out>/manifest.json
//! ```

use std::path::{Path, PathBuf};

use crate::config::{ModelKind, Split, Stratum};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Stem of a dataset container (append `.json` / `.f32`).
    pub fn data(&self, split: Split) -> PathBuf {
        self.root.join("data").join(split.name())
    }

    pub fn model(&self, kind: ModelKind) -> PathBuf {
        self.root.join("models").join(format!("{}.bin", kind.name()))
    }

    pub fn base(&self) -> PathBuf {
        self.root.join("models").join("base.json")
    }

    pub fn training_log(&self) -> PathBuf {
        self.root.join("models").join("training.json")
    }

    pub fn detection(&self) -> PathBuf {
        self.root.join("detection.csv")
    }

    pub fn strata(&self) -> PathBuf {
        self.root.join("attributions").join("strata.json")
    }

    pub fn attribution(&self, model: ModelKind, method: &str, stratum: Stratum) -> PathBuf {
        self.root.join("attributions").join(format!("{}_{method}_{}.json", model.name(), stratum.name()))
    }

    pub fn demo(&self) -> PathBuf {
        self.root.join("attributions").join("time_domain_demo.json")
    }

    pub fn alignment_csv(&self) -> PathBuf {
        self.root.join("alignment.csv")
    }

    pub fn alignment_json(&self) -> PathBuf {
        self.root.join("alignment.json")
    }

    pub fn summary_json(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    pub fn summary_txt(&self) -> PathBuf {
        self.root.join("summary.txt")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    /// Path relative to the output root, for manifests.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).to_string_lossy().into_owned()
    }
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    Ok(())
}

pub(crate) fn require(path: &Path, stage: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(HarnessError::MissingInput { path: path.to_path_buf(), stage })
    }
}

pub(crate) fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, bytes).map_err(HarnessError::io(path))
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(HarnessError::io(path))
}
