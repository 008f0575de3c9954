use std::path::PathBuf;

use envex::sim::{make_dataset, save_dataset};

use crate::config::{ExperimentConfig, Split};
use crate::error::Result;
use crate::layout::{ensure_parent, Layout};

pub fn synth(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<PathBuf>> {
    let mut artifacts = Vec::new();
    for split in Split::ALL {
        let spec = cfg.split_spec(split);
        let signals = make_dataset::<f64>(&spec)?;
        let stem = layout.data(split);
        ensure_parent(&stem)?;
        save_dataset(&stem, &signals)?;
        let faults = signals.iter().filter(|s| s.label.is_fault()).count();
        log::info!(
            "{}: {} signals, {faults} faults, rpm {}, bpfo {:.3} Hz",
            split.name(),
            signals.len(),
            spec.rpm,
            spec.bpfo_hz()?
        );
        artifacts.push(stem.with_extension("json"));
        artifacts.push(stem.with_extension("f32"));
    }
    Ok(artifacts)
}
