use std::collections::HashMap;
use std::path::PathBuf;

use envex::alignment::{informative_indices, save_reports, signal_alignment, GlobalAlignmentReport, InformativeIndexSet};
use envex::attribution::AttributionFile;

use super::StrataFile;
use crate::config::{ExperimentConfig, Stratum};
use crate::error::Result;
use crate::layout::{self, Layout};

/// Score every attribution file written by the attribution stage.
pub fn align(cfg: &ExperimentConfig, layout: &Layout) -> Result<Vec<PathBuf>> {
    let strata = StrataFile::load(layout)?;
    let params = cfg.alignment;
    let mut sets: HashMap<u64, InformativeIndexSet> = HashMap::new();
    let mut reports = Vec::new();

    for entry in strata.models.iter().filter(|m| m.skipped.is_none()) {
        for method in &cfg.attribution.methods {
            for stratum in Stratum::ALL {
                let path = layout.attribution(entry.model, method.name(), stratum);
                layout::require(&path, "attribute")?;
                let file = AttributionFile::load(&path)?;
                let mut per_signal = Vec::with_capacity(file.signals.len());
                for s in &file.signals {
                    let set = match sets.get(&s.bpfo_hz.to_bits()) {
                        Some(set) => set,
                        None => {
                            let set = informative_indices(s.bpfo_hz, params.harmonics, params.tolerance, file.d, file.sample_rate_hz)?;
                            sets.entry(s.bpfo_hz.to_bits()).or_insert(set)
                        }
                    };
                    per_signal.push(signal_alignment(&s.binned, set)?);
                }
                let report = GlobalAlignmentReport::from_signals_lenient(&file.model, method.name(), stratum.name(), &per_signal);
                if report.ias.is_none() {
                    log::warn!("{} {} {}: no scorable signals", file.model, method.name(), stratum.name());
                }
                reports.push(report);
            }
        }
    }

    let (csv, json) = (layout.alignment_csv(), layout.alignment_json());
    layout::ensure_parent(&csv)?;
    save_reports(&reports, &csv, &json)?;
    Ok(vec![csv, json])
}
