//! Local feature attribution over packed envelope-spectrum coefficients.
//!
//! Every method works on any [`Model`] (or [`Differentiable`]) over a flat
//! feature vector; in practice the model is an
//! [`AugmentedModel`](crate::domain::AugmentedModel) so the features are the
//! packed envelope spectrum `z`.

mod gradshap;
mod ig;
mod lime;
mod shapley;

pub use gradshap::{grad_shap, grad_shap_values};
pub use ig::{integrated_gradients, integrated_gradients_values};
pub use lime::{lime, lime_coefficients, LimeParams};
pub use shapley::{shapley_exact_values, shapley_sampling, shapley_sampling_values, MAX_EXACT_GROUPS};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{size_err, Error, Result};
use crate::models::{Differentiable, Model};
use crate::scalar::Real;
use crate::signal::{packed_slots, PackedRealSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IntegratedGradients,
    GradShap,
    Shapley,
    Lime,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::IntegratedGradients => "integrated_gradients",
            Method::GradShap => "grad_shap",
            Method::Shapley => "shapley",
            Method::Lime => "lime",
        }
    }
}

/// Reference point the explanation is taken relative to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    /// All-zero spectrum (decodes to the zero signal).
    Zero,
    /// Explicit baseline vector supplied by the caller.
    Custom,
    /// Distribution of background spectra.
    Background { n: usize },
}

/// Per-coefficient attributions and their per-bin sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector<T> {
    pub method: Method,
    pub baseline: Baseline,
    pub seed: Option<u64>,
    pub packed: Vec<T>,
    pub binned: Vec<T>,
}

impl<T: Real> AttributionVector<T> {
    pub fn new(method: Method, baseline: Baseline, seed: Option<u64>, packed: Vec<T>) -> Result<Self> {
        if let Some(i) = packed.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("{} attribution {i} is not finite", method.name())));
        }
        let binned = aggregate_bins(&packed)?;
        Ok(Self { method, baseline, seed, packed, binned })
    }

    pub fn total(&self) -> T {
        self.packed.iter().copied().sum()
    }
}

/// `binned[b] = packed[Re_b] + packed[Im_b]`; DC and Nyquist have no Im slot.
pub fn aggregate_bins<T: Real>(packed: &[T]) -> Result<Vec<T>> {
    let d = packed.len();
    if d < 2 || !d.is_power_of_two() {
        return size_err(format!("packed length must be a power of two >= 2, got {d}"));
    }
    Ok((0..=d / 2)
        .map(|b| {
            let (re, im) = packed_slots(d, b);
            packed[re] + im.map_or(T::zero(), |i| packed[i])
        })
        .collect())
}

/// Partition of the packed coefficients into contiguous frequency segments.
///
/// Group 0 is the DC coefficient alone; the remaining groups cover bins
/// `1..=d/2` in segments of `width` bins (the last may be shorter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroups {
    d: usize,
    width: usize,
    groups: Vec<Vec<usize>>,
}

impl FeatureGroups {
    pub fn contiguous(d: usize, width: usize) -> Result<Self> {
        if d < 2 || !d.is_power_of_two() {
            return size_err(format!("packed length must be a power of two >= 2, got {d}"));
        }
        if width == 0 {
            return Err(Error::Config("group width must be positive".into()));
        }
        let mut groups = vec![vec![0]];
        let mut bin = 1;
        while bin <= d / 2 {
            let end = (bin + width).min(d / 2 + 1);
            let mut g = Vec::with_capacity(2 * width);
            for b in bin..end {
                let (re, im) = packed_slots(d, b);
                g.push(re);
                g.extend(im);
            }
            groups.push(g);
            bin = end;
        }
        Ok(Self { d, width, groups })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn members(&self, g: usize) -> &[usize] {
        &self.groups[g]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.groups.iter().map(Vec::as_slice)
    }

    /// Spread each group value uniformly over its member coefficients.
    pub fn spread<T: Real>(&self, per_group: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.d];
        for (g, &v) in self.groups.iter().zip(per_group) {
            let share = v / T::of_usize(g.len());
            for &i in g {
                out[i] = share;
            }
        }
        out
    }

    pub(crate) fn check(&self, d: usize) -> Result<()> {
        if d != self.d {
            return size_err(format!("groups built for d={} but input has length {d}", self.d));
        }
        Ok(())
    }
}

pub(crate) fn check_same_len<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return size_err(format!("input has length {} but baseline has length {}", a.len(), b.len()));
    }
    Ok(())
}

pub(crate) fn check_model<T: Real, M: Model<T> + ?Sized>(model: &M, d: usize) -> Result<()> {
    if model.input_len() != d {
        return size_err(format!("model expects {} inputs, got {d}", model.input_len()));
    }
    Ok(())
}

/// Method choice with its sampling budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AttributionConfig {
    IntegratedGradients {
        steps: usize,
    },
    GradShap {
        n_samples: usize,
        seed: u64,
    },
    Shapley {
        n_permutations: usize,
        group_width: usize,
        seed: u64,
        #[serde(default)]
        exact: bool,
    },
    Lime {
        n_samples: usize,
        group_width: usize,
        #[serde(default = "LimeParams::default_kernel_width")]
        kernel_width: f64,
        #[serde(default = "LimeParams::default_ridge")]
        ridge_lambda: f64,
        seed: u64,
    },
}

impl AttributionConfig {
    pub fn method(&self) -> Method {
        match self {
            Self::IntegratedGradients { .. } => Method::IntegratedGradients,
            Self::GradShap { .. } => Method::GradShap,
            Self::Shapley { .. } => Method::Shapley,
            Self::Lime { .. } => Method::Lime,
        }
    }

    pub fn name(&self) -> &'static str {
        self.method().name()
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::IntegratedGradients { .. } => None,
            Self::GradShap { seed, .. } | Self::Shapley { seed, .. } | Self::Lime { seed, .. } => Some(*seed),
        }
    }

    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut c = self.clone();
        match &mut c {
            Self::IntegratedGradients { .. } => {}
            Self::GradShap { seed, .. } | Self::Shapley { seed, .. } | Self::Lime { seed, .. } => *seed = new_seed,
        }
        c
    }

    pub fn baseline(&self, background: usize) -> Baseline {
        match self {
            Self::GradShap { .. } => Baseline::Background { n: background },
            _ => Baseline::Zero,
        }
    }

    /// Explain `model` at `z`: zero baseline for IG/Shapley/LIME, `background`
    /// for GradSHAP.
    pub fn run<T: Real, M: Differentiable<T> + ?Sized>(
        &self,
        model: &M,
        z: &PackedRealSpectrum<T>,
        background: &[PackedRealSpectrum<T>],
    ) -> Result<AttributionVector<T>> {
        let zero = vec![T::zero(); z.len()];
        match self {
            Self::IntegratedGradients { steps } => integrated_gradients(model, z.values(), &zero, *steps),
            Self::GradShap { n_samples, seed } => {
                let bg: Vec<&[T]> = background.iter().map(|b| b.values()).collect();
                grad_shap(model, z.values(), &bg, *n_samples, *seed)
            }
            Self::Shapley { n_permutations, group_width, seed, exact } => {
                let groups = FeatureGroups::contiguous(z.len(), *group_width)?;
                shapley_sampling(model, z.values(), &zero, &groups, *n_permutations, *exact, *seed)
            }
            Self::Lime { n_samples, group_width, kernel_width, ridge_lambda, seed } => {
                let groups = FeatureGroups::contiguous(z.len(), *group_width)?;
                let params = LimeParams { n_samples: *n_samples, kernel_width: *kernel_width, ridge_lambda: *ridge_lambda };
                lime(model, z.values(), &groups, &params, *seed)
            }
        }
    }
}

/// Attribution of one explained signal as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalAttribution {
    /// Index of the signal within its dataset split.
    pub index: usize,
    pub bpfo_hz: f64,
    pub score: f64,
    pub binned: Vec<f64>,
}

/// JSON attribution file: one (model, method, stratum) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionFile {
    pub format: String,
    pub version: u32,
    pub model: String,
    pub method: Method,
    pub config: AttributionConfig,
    pub seed: Option<u64>,
    pub baseline: Baseline,
    pub stratum: String,
    pub d: usize,
    pub sample_rate_hz: f64,
    pub signals: Vec<SignalAttribution>,
}

impl AttributionFile {
    pub const FORMAT: &'static str = "envex-attribution";
    pub const VERSION: u32 = 1;

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        if f.format != Self::FORMAT || f.version != Self::VERSION {
            return Err(Error::Format(format!("{} is not a v{} attribution file", path.display(), Self::VERSION)));
        }
        for s in &f.signals {
            if s.binned.len() != f.d / 2 + 1 {
                return Err(Error::Format(format!("signal {} has {} bins, expected {}", s.index, s.binned.len(), f.d / 2 + 1)));
            }
        }
        Ok(f)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn re_only_binning() {
        let d = 16;
        let mut packed = vec![0.0f64; d];
        packed[0] = 1.0;
        packed[1] = 2.0; // Re1
        packed[5] = 3.0; // Re3
        packed[15] = 4.0; // Nyquist
        let b = aggregate_bins(&packed).unwrap();
        assert_eq!(b, vec![1.0, 2.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn groups_partition_all_coefficients() {
        for (d, w) in [(16usize, 3usize), (4096, 8), (64, 1), (64, 100)] {
            let g = FeatureGroups::contiguous(d, w).unwrap();
            let mut seen = vec![0; d];
            for m in g.iter() {
                for &i in m {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "d={d} w={w}");
            assert_eq!(g.members(0), &[0]);
        }
        assert_eq!(FeatureGroups::contiguous(4096, 8).unwrap().len(), 257);
        assert!(FeatureGroups::contiguous(4096, 0).is_err());
    }

    #[test]
    fn spread_preserves_group_totals() {
        let g = FeatureGroups::contiguous(32, 4).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|j| j as f64 - 1.5).collect();
        let packed = g.spread(&vals);
        for (j, m) in g.iter().enumerate() {
            let s: f64 = m.iter().map(|&i| packed[i]).sum();
            assert!((s - vals[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn config_json_shape() {
        let c = AttributionConfig::Lime { n_samples: 10, group_width: 8, kernel_width: 0.75, ridge_lambda: 1.0, seed: 3 };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"method\":\"lime\""));
        let back: AttributionConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let short: AttributionConfig = serde_json::from_str(r#"{"method":"lime","n_samples":5,"group_width":4,"seed":1}"#).unwrap();
        assert!(matches!(short, AttributionConfig::Lime { kernel_width, .. } if kernel_width == LimeParams::default_kernel_width()));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            AttributionVector::new(Method::Lime, Baseline::Zero, None, vec![0.0, f64::NAN]),
            Err(Error::Numerical(_))
        ));
    }

    proptest! {
        #[test]
        fn aggregation_preserves_sum(seed in any::<u64>(), log_d in 1u32..12) {
            let d = 1usize << log_d;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let packed: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let binned = aggregate_bins(&packed).unwrap();
            prop_assert_eq!(binned.len(), d / 2 + 1);
            let a: f64 = packed.iter().sum();
            let b: f64 = binned.iter().sum();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
