use std::fmt::Write as _;
use std::path::PathBuf;

use envex::alignment::{GlobalAlignmentReport, MeanCi};
use serde::{Deserialize, Serialize};

use super::train::read_detection_table;
use super::{Stage, DetectionRow};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::layout::{self, Layout};
use crate::manifest::RunManifest;

/// Detectable versus another stratum, by mean IAS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCheck {
    pub model: String,
    pub method: String,
    pub against: String,
    pub detectable_ias: Option<f64>,
    pub other_ias: Option<f64>,
    /// Detectable mean above the other mean; `None` if either is missing.
    pub ordered: Option<bool>,
    /// 95% intervals do not overlap, detectable above.
    pub separated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub detection: Vec<DetectionRow>,
    pub alignment: Vec<GlobalAlignmentReport>,
    pub checks: Vec<DirectionalCheck>,
}

impl Summary {
    fn checks(alignment: &[GlobalAlignmentReport]) -> Vec<DirectionalCheck> {
        let find = |model: &str, method: &str, stratum: &str| {
            alignment.iter().find(|r| r.model == model && r.method == method && r.stratum == stratum).and_then(|r| r.ias)
        };
        let mut out = Vec::new();
        for r in alignment.iter().filter(|r| r.stratum == "detectable") {
            for against in ["undetectable", "generalization"] {
                let (a, b): (Option<MeanCi>, Option<MeanCi>) = (r.ias, find(&r.model, &r.method, against));
                out.push(DirectionalCheck {
                    model: r.model.clone(),
                    method: r.method.clone(),
                    against: against.into(),
                    detectable_ias: a.map(|c| c.mean),
                    other_ias: b.map(|c| c.mean),
                    ordered: a.zip(b).map(|(a, b)| a.mean > b.mean),
                    separated: a.zip(b).map(|(a, b)| a.separated_above(&b)),
                });
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        let ci = |c: Option<MeanCi>| c.map(|c| format!("{:.3} ± {:.3}", c.mean, c.half_width)).unwrap_or_else(|| "-".into());
        let mut s = String::new();
        let _ = writeln!(s, "config {}", self.config_hash);
        let _ = writeln!(s, "\ndetection");
        let _ = writeln!(s, "{:<6} {:<12} {:>9} {:>9} {:>9}", "model", "split", "precision", "recall", "f1");
        for r in &self.detection {
            let _ = writeln!(s, "{:<6} {:<12} {:>9} {:>9} {:>9}", r.model, r.split, opt(r.precision), opt(r.recall), opt(r.f1));
        }
        let _ = writeln!(s, "\nalignment");
        let _ = writeln!(s, "{:<6} {:<22} {:<15} {:>16} {:>20} {:>5} {:>5}", "model", "method", "stratum", "IAS", "ISNR (dB)", "n", "excl");
        for r in &self.alignment {
            let _ = writeln!(
                s,
                "{:<6} {:<22} {:<15} {:>16} {:>20} {:>5} {:>5}",
                r.model,
                r.method,
                r.stratum,
                ci(r.ias),
                ci(r.isnr),
                r.n,
                r.excluded
            );
        }
        let _ = writeln!(s, "\ndetectable IAS above other strata");
        for c in &self.checks {
            let verdict = match (c.ordered, c.separated) {
                (Some(_), Some(true)) => "separated",
                (Some(true), _) => "above, intervals overlap",
                (Some(false), _) => "not above",
                _ => "n/a",
            };
            let _ = writeln!(s, "{:<6} {:<22} vs {:<15} {verdict}", c.model, c.method, c.against);
        }
        s
    }
}

/// Stages whose outputs the report needs but which have not run under the
/// current config.
fn missing_stages(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<String>> {
    let manifest = RunManifest::load(layout)?.filter(|m| m.config_hash == cfg.hash());
    Ok(Stage::ALL
        .iter()
        .filter(|&&s| s != Stage::Report)
        .filter(|s| !manifest.as_ref().is_some_and(|m| m.stages.contains_key(s.name())))
        .map(|s| s.name().to_string())
        .collect())
}

pub fn report(cfg: &ExperimentConfig, layout: &Layout) -> Result<(Summary, Vec<PathBuf>)> {
    let missing = missing_stages(cfg, layout)?;
    if !missing.is_empty() {
        return Err(HarnessError::MissingStages(missing));
    }
    let detection = read_detection_table(&layout.detection())?;
    let path = layout.alignment_json();
    layout::require(&path, "align")?;
    let alignment: Vec<GlobalAlignmentReport> = serde_json::from_slice(&layout::read(&path)?)?;
    let checks = Summary::checks(&alignment);
    let summary = Summary { config_hash: cfg.hash(), detection, alignment, checks };

    let (json, txt) = (layout.summary_json(), layout.summary_txt());
    layout::write(&json, serde_json::to_vec_pretty(&summary)?)?;
    layout::write(&txt, summary.render())?;
    Ok((summary, vec![json, txt]))
}
