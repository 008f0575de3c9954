//! Domain-knowledge alignment of envelope-spectrum attributions: informative
//! index sets around BPFO harmonics, IAS, ISNR and their sample means.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attribution::AttributionConfig;
use crate::domain::{augment, to_interpretable};
use crate::error::{Error, Result};
use crate::models::Differentiable;
use crate::scalar::Real;
use crate::signal::{PackedRealSpectrum, TimeSignal};

/// ISNR is clamped to `±ISNR_CLAMP_DB`.
pub const ISNR_CLAMP_DB: f64 = 120.0;

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Envelope-spectrum bins lying within `tolerance·k·bpfo` of `k·bpfo` for
/// `k = 1..=harmonics+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformativeIndexSet {
    pub bins: Vec<usize>,
    pub bpfo_hz: f64,
    pub harmonics: usize,
    pub tolerance: f64,
    pub d: usize,
    pub sample_rate_hz: f64,
    /// Set when some harmonic bands were cut at Nyquist.
    pub truncated: bool,
}

impl InformativeIndexSet {
    pub fn n_bins(&self) -> usize {
        self.d / 2 + 1
    }

    /// Membership mask over bins `0..=d/2`.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_bins()];
        for &b in &self.bins {
            m[b] = true;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

pub fn informative_indices(
    bpfo_hz: f64,
    harmonics: usize,
    tolerance: f64,
    d: usize,
    sample_rate_hz: f64,
) -> Result<InformativeIndexSet> {
    if !(bpfo_hz.is_finite() && bpfo_hz > 0.0) {
        return Err(Error::Config(format!("bpfo must be positive, got {bpfo_hz}")));
    }
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::Config(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    if d < 2 || !d.is_power_of_two() || !(sample_rate_hz > 0.0) {
        return Err(Error::Config(format!("invalid grid d={d}, fs={sample_rate_hz}")));
    }
    let df = sample_rate_hz / d as f64;
    let nyquist = sample_rate_hz / 2.0;
    let mut bins = Vec::new();
    let mut truncated = false;
    for k in 1..=harmonics + 1 {
        let center = k as f64 * bpfo_hz;
        let half = tolerance * center;
        if center + half >= nyquist {
            truncated = true;
        }
        // slack absorbs rounding of grid-aligned band edges
        let slack = 1e-9 * center;
        let lo = ((center - half - slack) / df).ceil().max(1.0) as usize;
        let hi = (((center + half + slack) / df).floor() as usize).min(d / 2);
        if lo <= hi {
            bins.extend((lo..=hi).filter(|&b| ((b as f64 * df) - center).abs() <= half + slack));
        }
    }
    if truncated {
        log::warn!(
            "harmonic bands of bpfo {bpfo_hz} Hz (m={harmonics}, tol={tolerance}) exceed Nyquist {nyquist} Hz; truncated"
        );
    }
    bins.sort_unstable();
    bins.dedup();
    Ok(InformativeIndexSet { bins, bpfo_hz, harmonics, tolerance, d, sample_rate_hz, truncated })
}

fn check_binned<T>(binned: &[T], set: &InformativeIndexSet) -> Result<()> {
    if binned.len() != set.n_bins() {
        return Err(Error::Size(format!("expected {} bins, got {}", set.n_bins(), binned.len())));
    }
    Ok(())
}

/// Informative Attribution Share over non-DC bins; `None` when all non-DC
/// attribution is zero.
pub fn ias<T: Real>(binned: &[T], set: &InformativeIndexSet) -> Result<Option<T>> {
    check_binned(binned, set)?;
    let mask = set.mask();
    let (mut inside, mut total) = (T::zero(), T::zero());
    for (b, v) in binned.iter().enumerate().skip(1) {
        let a = v.abs();
        total += a;
        if mask[b] {
            inside += a;
        }
    }
    Ok((total > T::zero()).then(|| (inside / total).min(T::one())))
}

/// Informative signal-to-noise ratio in dB over non-DC bins, clamped to
/// `±120`; `None` when both energies vanish.
pub fn isnr<T: Real>(binned: &[T], set: &InformativeIndexSet) -> Result<Option<T>> {
    check_binned(binned, set)?;
    let mask = set.mask();
    let (mut inside, mut outside) = (T::zero(), T::zero());
    for (b, v) in binned.iter().enumerate().skip(1) {
        let e = *v * *v;
        if mask[b] {
            inside += e;
        } else {
            outside += e;
        }
    }
    let clamp = T::of(ISNR_CLAMP_DB);
    Ok(match (inside > T::zero(), outside > T::zero()) {
        (false, false) => None,
        (true, false) => Some(clamp),
        (false, true) => Some(-clamp),
        (true, true) => {
            let db = T::of(10.0) * (inside / outside).log10();
            Some(if db.is_finite() { db.max(-clamp).min(clamp) } else if db > T::zero() { clamp } else { -clamp })
        }
    })
}

/// Sample mean with a normal-approximation 95% half-width `1.96·s/√n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    /// Non-overlapping intervals with `self` above `other`.
    pub fn separated_above(&self, other: &MeanCi) -> bool {
        self.lower() > other.upper()
    }
}

/// Uses the unbiased sample standard deviation; a single value has zero
/// half-width.
pub fn mean_ci(values: &[f64]) -> Option<MeanCi> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let half_width = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Z_95 * var.sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    Some(MeanCi { mean, half_width, n })
}

/// IAS/ISNR of a single explained signal (`None` = undefined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalAlignment {
    pub ias: Option<f64>,
    pub isnr: Option<f64>,
}

pub fn signal_alignment<T: Real>(binned: &[T], set: &InformativeIndexSet) -> Result<SignalAlignment> {
    Ok(SignalAlignment {
        ias: ias(binned, set)?.map(Real::as_f64),
        isnr: isnr(binned, set)?.map(Real::as_f64),
    })
}

/// Global alignment of one (model, method, stratum) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalAlignmentReport {
    pub model: String,
    pub method: String,
    pub stratum: String,
    /// Signals with defined metrics.
    pub n: usize,
    /// Signals dropped because a metric was undefined.
    pub excluded: usize,
    pub ias: Option<MeanCi>,
    pub isnr: Option<MeanCi>,
}

impl GlobalAlignmentReport {
    /// Aggregate per-signal metrics; signals with any undefined metric are
    /// excluded and counted. An all-excluded cell yields an error.
    pub fn from_signals(model: &str, method: &str, stratum: &str, per_signal: &[SignalAlignment]) -> Result<Self> {
        let report = Self::from_signals_lenient(model, method, stratum, per_signal);
        if report.n == 0 {
            return Err(Error::Config(format!(
                "no signal with defined alignment metrics for {model}/{method}/{stratum}"
            )));
        }
        Ok(report)
    }

    /// As [`Self::from_signals`] but an empty cell is returned with `n = 0`
    /// and no means instead of an error.
    pub fn from_signals_lenient(model: &str, method: &str, stratum: &str, per_signal: &[SignalAlignment]) -> Self {
        let (mut ias_v, mut isnr_v) = (Vec::new(), Vec::new());
        for s in per_signal {
            if let (Some(a), Some(b)) = (s.ias, s.isnr) {
                ias_v.push(a);
                isnr_v.push(b);
            }
        }
        Self {
            model: model.into(),
            method: method.into(),
            stratum: stratum.into(),
            n: ias_v.len(),
            excluded: per_signal.len() - ias_v.len(),
            ias: mean_ci(&ias_v),
            isnr: mean_ci(&isnr_v),
        }
    }
}

/// A signal to explain with its characteristic frequency.
#[derive(Debug, Clone)]
pub struct ExplainTarget<T> {
    pub signal: TimeSignal<T>,
    pub bpfo_hz: f64,
}

/// Parameters of the informative index sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentParams {
    pub harmonics: usize,
    pub tolerance: f64,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        Self { harmonics: 10, tolerance: 0.02 }
    }
}

/// Attribute every target in the envelope domain and aggregate IAS/ISNR.
///
/// Every target must be predicted as fault (`score > 0.5`) by `model`.
pub fn global_alignment<T: Real, M: Differentiable<T>>(
    model: &M,
    model_name: &str,
    stratum: &str,
    targets: &[ExplainTarget<T>],
    method: &AttributionConfig,
    background: &[PackedRealSpectrum<T>],
    params: AlignmentParams,
) -> Result<GlobalAlignmentReport> {
    let mut per_signal = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let score = model.predict(t.signal.samples())?;
        if score <= T::of(0.5) {
            return Err(Error::Config(format!("target {i} is not predicted as fault (score {score})")));
        }
        let rep = to_interpretable(&t.signal);
        let aug = augment(model, &rep.residual, t.signal.sample_rate_hz())?;
        let attr = method.run(&aug, &rep.z, background)?;
        let set = informative_indices(
            t.bpfo_hz,
            params.harmonics,
            params.tolerance,
            t.signal.len(),
            t.signal.sample_rate_hz(),
        )?;
        per_signal.push(signal_alignment(&attr.binned, &set)?);
    }
    GlobalAlignmentReport::from_signals(model_name, method.name(), stratum, &per_signal)
}

/// CSV header of the alignment report.
pub const CSV_HEADER: [&str; 9] = ["model", "method", "stratum", "mean_ias", "ci_ias", "mean_isnr", "ci_isnr", "n", "excluded"];

/// One row per report; undefined means are written as empty fields.
pub fn write_csv<W: Write>(reports: &[GlobalAlignmentReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.model.clone(),
            r.method.clone(),
            r.stratum.clone(),
            fmt(r.ias.map(|c| c.mean)),
            fmt(r.ias.map(|c| c.half_width)),
            fmt(r.isnr.map(|c| c.mean)),
            fmt(r.isnr.map(|c| c.half_width)),
            r.n.to_string(),
            r.excluded.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_reports(reports: &[GlobalAlignmentReport], csv_path: &Path, json_path: &Path) -> Result<()> {
    write_csv(reports, std::fs::File::create(csv_path)?)?;
    std::fs::write(json_path, serde_json::to_vec_pretty(reports)?)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
