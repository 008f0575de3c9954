//! Pipeline stages. Each stage reads the outputs of earlier stages from the
//! output directory, writes its own and records itself in the manifest.

mod align;
mod attribute;
mod report;
mod synth;
mod train;

pub use align::align;
pub use attribute::{attribute, DemoFile, DemoSignal, StrataFile, StratumSelection};
pub use report::{report, DirectionalCheck, Summary};
pub use synth::synth;
pub use train::{train, DetectionRow};

use std::path::Path;
use std::time::Instant;

use envex::models::{io, BaseClassifier, TrainedModel};
use envex::sim::{load_dataset, LabeledSignal};
use envex::Model;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelKind, Split};
use crate::error::Result;
use crate::layout::{self, Layout};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Synth,
    Train,
    Attribute,
    Align,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Synth, Stage::Train, Stage::Attribute, Stage::Align, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Train => "train",
            Stage::Attribute => "attribute",
            Stage::Align => "align",
            Stage::Report => "report",
        }
    }
}

/// Run one stage and record it in the manifest.
pub fn run_stage(stage: Stage, cfg: &ExperimentConfig, layout: &Layout) -> Result<()> {
    cfg.validate()?;
    let start = Instant::now();
    log::info!("stage {} -> {}", stage.name(), layout.root().display());
    let artifacts = match stage {
        Stage::Synth => synth(cfg, layout)?,
        Stage::Train => train(cfg, layout)?,
        Stage::Attribute => attribute(cfg, layout)?,
        Stage::Align => align(cfg, layout)?,
        Stage::Report => report(cfg, layout)?.1,
    };
    let refs: Vec<&Path> = artifacts.iter().map(|p| p.as_path()).collect();
    let secs = start.elapsed().as_secs_f64();
    RunManifest::record(layout, &cfg.hash(), stage.name(), secs, &refs)?;
    log::info!("stage {} done in {secs:.1} s", stage.name());
    Ok(())
}

/// Run every stage in order.
pub fn run_all(cfg: &ExperimentConfig, layout: &Layout) -> Result<()> {
    for stage in Stage::ALL {
        run_stage(stage, cfg, layout)?;
    }
    Ok(())
}

pub fn load_split(layout: &Layout, split: Split) -> Result<Vec<LabeledSignal<f64>>> {
    let stem = layout.data(split);
    layout::require(&stem.with_extension("json"), "synth")?;
    Ok(load_dataset(&stem)?.1)
}

pub fn load_model(layout: &Layout, kind: ModelKind) -> Result<TrainedModel<f64>> {
    let path = layout.model(kind);
    layout::require(&path, "train")?;
    Ok(io::load(&path)?)
}

pub fn load_base(layout: &Layout) -> Result<BaseClassifier> {
    let path = layout.base();
    layout::require(&path, "train")?;
    Ok(serde_json::from_slice(&layout::read(&path)?)?)
}

pub fn scores<M: Model<f64> + ?Sized>(model: &M, signals: &[LabeledSignal<f64>]) -> Result<Vec<f64>> {
    Ok(signals.par_iter().map(|s| model.predict(s.signal.samples())).collect::<envex::Result<Vec<f64>>>()?)
}

/// BASE decisions using each signal's own BPFO.
pub fn base_decisions(base: &BaseClassifier, signals: &[LabeledSignal<f64>]) -> Result<Vec<bool>> {
    Ok(signals
        .par_iter()
        .map(|s| base.with_bpfo(s.bpfo_hz).predict(&s.signal).map(|(f, _)| f))
        .collect::<envex::Result<Vec<bool>>>()?)
}
