use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::layout::{self, Layout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub seconds: f64,
    /// Paths relative to the output root.
    pub artifacts: Vec<String>,
}

/// Provenance of an output directory. Stage records from a different config
/// hash are discarded on the next write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("envex-harness".into(), env!("CARGO_PKG_VERSION").into());
        Self { config_hash: config_hash.into(), versions, stages: BTreeMap::new() }
    }

    /// The manifest in `layout`, if any.
    pub fn load(layout: &Layout) -> Result<Option<Self>> {
        let path = layout.manifest();
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_slice(&layout::read(&path)?)?))
    }

    /// Record a finished stage (replacing any earlier record of it).
    pub fn record(layout: &Layout, config_hash: &str, stage: &str, seconds: f64, artifacts: &[&Path]) -> Result<Self> {
        let mut m = match Self::load(layout)? {
            Some(m) if m.config_hash == config_hash => m,
            _ => Self::new(config_hash),
        };
        let mut artifacts: Vec<String> = artifacts.iter().map(|p| layout.relative(p)).collect();
        artifacts.sort();
        m.stages.insert(stage.into(), StageRecord { seconds, artifacts });
        layout::write(&layout.manifest(), serde_json::to_vec_pretty(&m)?)?;
        Ok(m)
    }
}
