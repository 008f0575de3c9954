use std::path::PathBuf;
use std::time::Instant;

use envex::attribution::{integrated_gradients, AttributionFile, SignalAttribution};
use envex::domain::{augment, to_interpretable};
use envex::sim::LabeledSignal;
use envex::signal::PackedRealSpectrum;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{base_decisions, load_base, load_model, load_split, scores};
use crate::config::{ExperimentConfig, ModelKind, Split, Stratum};
use crate::error::{HarnessError, Result};
use crate::layout::{self, Layout};

/// Signals chosen for one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSelection {
    pub stratum: Stratum,
    pub split: Split,
    /// Size of the full stratum before subsampling.
    pub available: usize,
    /// Dataset indices within `split`, ascending.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStrata {
    pub model: ModelKind,
    /// Why the model was not explained, if it was not.
    pub skipped: Option<String>,
    pub strata: Vec<StratumSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataFile {
    pub sample_size: usize,
    pub seed: u64,
    /// Indices of the healthy training signals used as GradSHAP background.
    pub background: Vec<usize>,
    pub models: Vec<ModelStrata>,
}

impl StrataFile {
    pub fn load(layout: &Layout) -> Result<Self> {
        let path = layout.strata();
        layout::require(&path, "attribute")?;
        Ok(serde_json::from_slice(&layout::read(&path)?)?)
    }
}

/// Raw time-domain versus envelope-domain attribution of one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSignal {
    pub stratum: Stratum,
    pub index: usize,
    pub bpfo_hz: f64,
    pub score: f64,
    pub samples: Vec<f64>,
    /// Integrated gradients on the raw samples (zero baseline).
    pub time_attribution: Vec<f64>,
    /// Integrated gradients on the envelope spectrum, summed per bin.
    pub envelope_attribution: Vec<f64>,
    pub bin_width_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoFile {
    pub model: ModelKind,
    pub steps: usize,
    pub sample_rate_hz: f64,
    pub signals: Vec<DemoSignal>,
}

const DEMO_STEPS: usize = 64;

fn subsample(mut pool: Vec<usize>, n: usize, seed: u64) -> Vec<usize> {
    if pool.len() > n {
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        pool.truncate(n);
    }
    pool.sort_unstable();
    pool
}

fn stratum_seed(seed: u64, model: ModelKind, stratum: Stratum) -> u64 {
    seed ^ ((model as u64 + 1) << 32) ^ (stratum as u64 + 1)
}

fn data_for<'a>(stratum: Stratum, holdout: &'a [LabeledSignal<f64>], general: &'a [LabeledSignal<f64>]) -> &'a [LabeledSignal<f64>] {
    match stratum.split() {
        Split::Generalize => general,
        _ => holdout,
    }
}

pub fn attribute(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<PathBuf>> {
    let acfg = &cfg.attribution;
    let train = load_split(layout, Split::Train)?;
    let holdout = load_split(layout, Split::Holdout)?;
    let general = load_split(layout, Split::Generalize)?;
    let base = load_base(layout)?;
    let base_hold = base_decisions(&base, &holdout)?;

    let healthy: Vec<usize> = (0..train.len()).filter(|&i| !train[i].label.is_fault()).collect();
    let bg_idx = subsample(healthy, acfg.background, acfg.seed);
    let background: Vec<PackedRealSpectrum<f64>> = bg_idx.iter().map(|&i| to_interpretable(&train[i].signal).z).collect();

    let mut artifacts = Vec::new();
    let mut strata_file = StrataFile { sample_size: acfg.sample_size, seed: acfg.seed, background: bg_idx, models: Vec::new() };
    let mut demo: Option<DemoFile> = None;

    for &kind in &cfg.models {
        let model = load_model(layout, kind)?;
        let s_hold = scores(&model, &holdout)?;
        let s_gen = scores(&model, &general)?;
        let mut strata = Vec::new();
        for stratum in Stratum::ALL {
            let pool: Vec<usize> = match stratum {
                Stratum::Detectable => (0..holdout.len())
                    .filter(|&i| holdout[i].label.is_fault() && s_hold[i] > 0.5 && base_hold[i])
                    .collect(),
                Stratum::Undetectable => (0..holdout.len())
                    .filter(|&i| holdout[i].label.is_fault() && s_hold[i] > 0.5 && !base_hold[i])
                    .collect(),
                Stratum::Generalization => {
                    (0..general.len()).filter(|&i| general[i].label.is_fault() && s_gen[i] > 0.5).collect()
                }
            };
            let available = pool.len();
            let indices = subsample(pool, acfg.sample_size, stratum_seed(acfg.seed, kind, stratum));
            log::info!("{} {}: {} of {available} signals", kind.name(), stratum.name(), indices.len());
            strata.push(StratumSelection { stratum, split: stratum.split(), available, indices });
        }
        if !s_hold.iter().chain(&s_gen).any(|&s| s > 0.5) {
            log::warn!("{} predicts no faults; skipping its attributions", kind.name());
            strata_file.models.push(ModelStrata { model: kind, skipped: Some("model predicts no faults".into()), strata });
            continue;
        }

        for method in &acfg.methods {
            for sel in &strata {
                let data = data_for(sel.stratum, &holdout, &general);
                let scores_of = if sel.split == Split::Generalize { &s_gen } else { &s_hold };
                let start = Instant::now();
                let signals = sel
                    .indices
                    .par_iter()
                    .map(|&i| {
                        let s = &data[i];
                        let rep = to_interpretable(&s.signal);
                        let aug = augment(&model, &rep.residual, s.signal.sample_rate_hz())?;
                        let seeded = method.with_seed(method.seed().unwrap_or(0).wrapping_add(i as u64));
                        let attr = seeded.run(&aug, &rep.z, &background)?;
                        Ok(SignalAttribution { index: i, bpfo_hz: s.bpfo_hz, score: scores_of[i], binned: attr.binned })
                    })
                    .collect::<envex::Result<Vec<_>>>()?;
                log::info!(
                    "{} {} {}: {} signals in {:.1} s",
                    kind.name(),
                    method.name(),
                    sel.stratum.name(),
                    signals.len(),
                    start.elapsed().as_secs_f64()
                );
                let file = AttributionFile {
                    format: AttributionFile::FORMAT.into(),
                    version: AttributionFile::VERSION,
                    model: kind.name().into(),
                    method: method.method(),
                    config: method.clone(),
                    seed: method.seed(),
                    baseline: method.baseline(background.len()),
                    stratum: sel.stratum.name().into(),
                    d: cfg.dataset.d,
                    sample_rate_hz: cfg.dataset.sample_rate_hz,
                    signals,
                };
                let path = layout.attribution(kind, method.name(), sel.stratum);
                layout::ensure_parent(&path)?;
                file.save(&path)?;
                artifacts.push(path);
            }
        }

        if demo.is_none() {
            let mut signals = Vec::new();
            for sel in strata.iter().filter(|s| s.split == Split::Holdout) {
                let Some(&i) = sel.indices.first() else { continue };
                let s = &holdout[i];
                let x = s.signal.samples();
                let time = integrated_gradients(&model, x, &vec![0.0; x.len()], DEMO_STEPS)?;
                let rep = to_interpretable(&s.signal);
                let aug = augment(&model, &rep.residual, s.signal.sample_rate_hz())?;
                let env = integrated_gradients(&aug, rep.z.values(), &vec![0.0; x.len()], DEMO_STEPS)?;
                signals.push(DemoSignal {
                    stratum: sel.stratum,
                    index: i,
                    bpfo_hz: s.bpfo_hz,
                    score: s_hold[i],
                    samples: x.to_vec(),
                    time_attribution: time.packed,
                    envelope_attribution: env.binned,
                    bin_width_hz: s.signal.bin_width_hz(),
                });
            }
            if !signals.is_empty() {
                demo = Some(DemoFile { model: kind, steps: DEMO_STEPS, sample_rate_hz: cfg.dataset.sample_rate_hz, signals });
            }
        }
        strata_file.models.push(ModelStrata { model: kind, skipped: None, strata });
    }

    if strata_file.models.iter().all(|m| m.skipped.is_some()) {
        log::warn!("no model predicts any fault; no attributions written");
    }
    layout::write(&layout.strata(), serde_json::to_vec_pretty(&strata_file)?)?;
    artifacts.push(layout.strata());
    if let Some(d) = demo {
        layout::write(&layout.demo(), serde_json::to_vec(&d)?)?;
        artifacts.push(layout.demo());
    }
    if artifacts.is_empty() {
        return Err(HarnessError::Config("attribution stage produced no output".into()));
    }
    Ok(artifacts)
}
