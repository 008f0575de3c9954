//! Experiment pipeline: synthesize datasets, train classifiers, attribute
//! their decisions in the envelope domain and score the attributions.
//!
//! Every stage reads and writes files under one output directory (see
//! [`layout::Layout`]) and records itself in `manifest.json`.

pub mod config;
pub mod error;
pub mod layout;
pub mod manifest;
pub mod stages;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use layout::Layout;
pub use stages::{run_all, run_stage, Stage};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "ENVEX_OUT";

/// Output root: `cli` if given, else `$ENVEX_OUT`, else the config's.
pub fn resolve_output(cfg: &ExperimentConfig, cli: Option<&std::path::Path>) -> std::path::PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(p) if !p.is_empty() => p.into(),
        _ => cfg.output_dir.clone(),
    }
}
