use std::collections::BTreeMap;
use std::path::PathBuf;

use envex::models::{evaluate, io, train as fit, BaseClassifier, EvalReport};
use serde::{Deserialize, Serialize};

use super::{base_decisions, load_split, scores};
use crate::config::{ExperimentConfig, Split};
use crate::error::{HarnessError, Result};
use crate::layout::{self, Layout};

/// One row of the precision/recall table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub model: String,
    pub split: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl DetectionRow {
    fn new(model: &str, split: Split, r: &EvalReport) -> Self {
        Self {
            model: model.into(),
            split: split.name().into(),
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            tp: r.true_positives,
            fp: r.false_positives,
            fn_: r.false_negatives,
            tn: r.true_negatives,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainingLog {
    models: BTreeMap<String, ModelLog>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelLog {
    seed: u64,
    epochs: usize,
    learning_rate: f64,
    losses: Vec<f64>,
}

/// Write the table as CSV; undefined metrics are empty fields.
pub(crate) fn write_detection_table(rows: &[DetectionRow], path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "split", "precision", "recall", "f1", "tp", "fp", "fn", "tn"])?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.split.clone(),
            fmt(r.precision),
            fmt(r.recall),
            fmt(r.f1),
            r.tp.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            r.tn.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::io(path)(e.into_error()))?;
    layout::write(path, bytes)
}

pub(crate) fn read_detection_table(path: &std::path::Path) -> Result<Vec<DetectionRow>> {
    layout::require(path, "train")?;
    let bytes = layout::read(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    Ok(r.deserialize().collect::<std::result::Result<Vec<DetectionRow>, _>>()?)
}

pub fn train(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<PathBuf>> {
    let splits: Vec<_> = Split::ALL.iter().map(|&s| load_split(layout, s).map(|d| (s, d))).collect::<Result<_>>()?;
    let train_set = &splits[0].1;
    let inputs: Vec<Vec<f64>> = train_set.iter().map(|s| s.signal.samples().to_vec()).collect();
    let labels: Vec<bool> = train_set.iter().map(|s| s.label.is_fault()).collect();

    let mut artifacts = Vec::new();
    let mut rows = Vec::new();
    let mut log = TrainingLog { models: BTreeMap::new() };
    for &kind in &cfg.models {
        let seed = kind.training_seed(cfg.seed);
        let arch = kind.architecture(cfg.dataset.d);
        log::info!("training {} on {} signals", kind.name(), inputs.len());
        let (model, losses) = fit(&arch, &inputs, &labels, &cfg.training, seed)?;
        let path = layout.model(kind);
        layout::ensure_parent(&path)?;
        io::save(&model, &path)?;
        artifacts.push(path);
        for (split, data) in &splits {
            let preds: Vec<bool> = scores(&model, data)?.into_iter().map(|s| s > 0.5).collect();
            let truth: Vec<bool> = data.iter().map(|s| s.label.is_fault()).collect();
            rows.push(DetectionRow::new(kind.name(), *split, &evaluate(&preds, &truth)?));
        }
        log.models.insert(
            kind.name().into(),
            ModelLog { seed, epochs: cfg.training.epochs, learning_rate: cfg.training.learning_rate, losses },
        );
    }

    let signals: Vec<_> = train_set.iter().map(|s| s.signal.clone()).collect();
    let base = BaseClassifier::fit(&signals, &labels, cfg.bpfo_train()?, cfg.base.harmonics, cfg.base.tolerance)?;
    log::info!("BASE threshold {:.4}", base.threshold);
    layout::write(&layout.base(), serde_json::to_vec_pretty(&base)?)?;
    for (split, data) in &splits {
        let preds = base_decisions(&base, data)?;
        let truth: Vec<bool> = data.iter().map(|s| s.label.is_fault()).collect();
        rows.push(DetectionRow::new("base", *split, &evaluate(&preds, &truth)?));
    }
    for r in &rows {
        log::info!("{:>4} {:>10}: precision {:?} recall {:?}", r.model, r.split, r.precision, r.recall);
    }

    write_detection_table(&rows, &layout.detection())?;
    layout::write(&layout.training_log(), serde_json::to_vec_pretty(&log)?)?;
    artifacts.extend([layout.base(), layout.detection(), layout.training_log()]);
    Ok(artifacts)
}
