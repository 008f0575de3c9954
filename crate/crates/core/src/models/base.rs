use serde::{Deserialize, Serialize};

use super::metrics::EvalReport;
use crate::alignment::{informative_indices, InformativeIndexSet};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{bin_power, envelope_spectrum, TimeSignal};

/// Number of uniformly spaced thresholds in `[0, 1]` tried by [`BaseClassifier::fit`].
pub const THRESHOLD_GRID: usize = 1000;

/// Share of non-DC envelope-spectrum energy that falls in the informative bins.
pub fn energy_share<T: Real>(x: &TimeSignal<T>, set: &InformativeIndexSet) -> Result<T> {
    if x.len() != set.d {
        return Err(Error::Size(format!("signal length {} but index set built for d={}", x.len(), set.d)));
    }
    let power = bin_power(&envelope_spectrum(x));
    let mask = set.mask();
    let (mut inside, mut total) = (T::zero(), T::zero());
    for (b, &p) in power.iter().enumerate().skip(1) {
        total += p;
        if mask[b] {
            inside += p;
        }
    }
    Ok(if total > T::zero() { (inside / total).min(T::one()) } else { T::zero() })
}

/// Envelope-energy baseline: fault iff the informative energy share exceeds
/// `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseClassifier {
    pub threshold: f64,
    pub bpfo_hz: f64,
    pub harmonics: usize,
    pub tolerance: f64,
}

impl BaseClassifier {
    /// Grid-search the threshold maximizing F1 on `signals`; ties go to the
    /// smallest threshold.
    pub fn fit<T: Real>(
        signals: &[TimeSignal<T>],
        labels: &[bool],
        bpfo_hz: f64,
        harmonics: usize,
        tolerance: f64,
    ) -> Result<Self> {
        if signals.len() != labels.len() {
            return Err(Error::Size(format!("{} signals for {} labels", signals.len(), labels.len())));
        }
        let mut shares = Vec::with_capacity(signals.len());
        let mut cache: Option<InformativeIndexSet> = None;
        for s in signals {
            let set = match &cache {
                Some(c) if c.d == s.len() && c.sample_rate_hz == s.sample_rate_hz() => c.clone(),
                _ => {
                    let c = informative_indices(bpfo_hz, harmonics, tolerance, s.len(), s.sample_rate_hz())?;
                    cache = Some(c.clone());
                    c
                }
            };
            shares.push(energy_share(s, &set)?.as_f64());
        }
        let threshold = Self::fit_threshold(&shares, labels)?;
        Ok(Self { threshold, bpfo_hz, harmonics, tolerance })
    }

    /// Threshold search on precomputed shares.
    pub fn fit_threshold(shares: &[f64], labels: &[bool]) -> Result<f64> {
        if shares.len() != labels.len() {
            return Err(Error::Size(format!("{} shares for {} labels", shares.len(), labels.len())));
        }
        if !labels.iter().any(|&l| l) {
            return Err(Error::Config("BASE fit needs at least one fault".into()));
        }
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..THRESHOLD_GRID {
            let t = i as f64 / (THRESHOLD_GRID - 1) as f64;
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for (&s, &l) in shares.iter().zip(labels) {
                match (s > t, l) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            let f1 = EvalReport::from_counts(tp, fp, fn_, tn).f1.unwrap_or(0.0);
            if f1 > best.0 {
                best = (f1, t);
            }
        }
        Ok(best.1)
    }

    pub fn index_set(&self, d: usize, sample_rate_hz: f64) -> Result<InformativeIndexSet> {
        informative_indices(self.bpfo_hz, self.harmonics, self.tolerance, d, sample_rate_hz)
    }

    /// `(is_fault, energy_share)`.
    pub fn predict<T: Real>(&self, x: &TimeSignal<T>) -> Result<(bool, T)> {
        let share = energy_share(x, &self.index_set(x.len(), x.sample_rate_hz())?)?;
        Ok((share.as_f64() > self.threshold, share))
    }

    /// Same threshold, different characteristic frequency.
    pub fn with_bpfo(&self, bpfo_hz: f64) -> Self {
        Self { bpfo_hz, ..self.clone() }
    }
}
