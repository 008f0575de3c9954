//! Experiment configuration, loaded from TOML.
//!
//! Every key is optional; missing keys take the defaults below. See
//! `configs/default.toml` for the full key set.

use std::path::{Path, PathBuf};

use envex::alignment::AlignmentParams;
use envex::attribution::{AttributionConfig, FeatureGroups};
use envex::models::{Architecture, CnnSpec, FcnSpec, TrainConfig};
use envex::sim::{bpfo, BearingGeometry, DatasetSpec, FaultModel, ToneParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root seed for dataset synthesis and training.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub models: Vec<ModelKind>,
    pub training: TrainConfig,
    pub base: BaseConfig,
    pub attribution: AttributionStageConfig,
    pub alignment: AlignmentParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            dataset: DatasetConfig::default(),
            models: vec![ModelKind::Cnn, ModelKind::Fcn],
            training: TrainConfig { learning_rate: 0.01, ..TrainConfig::default() },
            base: BaseConfig::default(),
            attribution: AttributionStageConfig::default(),
            alignment: AlignmentParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub d: usize,
    pub sample_rate_hz: f64,
    pub rpm_train: f64,
    pub rpm_generalize: f64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub n_real: usize,
    pub n_generalize: usize,
    pub fault_fraction: f64,
    pub geometry: BearingGeometry,
    /// Fault model of the train, holdout and generalization splits.
    pub fault: FaultModel,
    /// Shifted fault model of the real-analog split.
    pub real_fault: FaultModel,
    pub fault_noise: Vec<f64>,
    pub healthy_noise: Vec<f64>,
    pub tones: ToneParams,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            d: 4096,
            sample_rate_hz: 16000.0,
            rpm_train: 1500.0,
            rpm_generalize: 900.0,
            n_train: 800,
            n_holdout: 4800,
            n_real: 400,
            n_generalize: 400,
            fault_fraction: 0.5,
            geometry: BearingGeometry::default(),
            fault: FaultModel::default(),
            real_fault: FaultModel { resonance_hz: 3500.0, decay_rate: 1000.0, impulse_amplitude: 1.0, jitter_fraction: 0.02 },
            fault_noise: vec![0.0, 0.1, 0.2, 0.3, 0.55, 0.6, 0.65, 0.7],
            healthy_noise: vec![1.0],
            tones: ToneParams { amplitudes: vec![0.1, 0.05] },
        }
    }
}

/// Dataset partitions written by `synth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    /// Training data.
    Train,
    /// Fresh signals from the training distribution; explanation strata are
    /// drawn from here.
    Holdout,
    /// Training speed, shifted resonance/decay/jitter.
    Real,
    /// Unseen rotation speed.
    Generalize,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Holdout, Split::Real, Split::Generalize];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Holdout => "holdout",
            Split::Real => "real",
            Split::Generalize => "generalize",
        }
    }

    fn seed_offset(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Holdout => 1_000_000,
            Split::Real => 2_000_000,
            Split::Generalize => 3_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Cnn,
    Fcn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Fcn => "fcn",
        }
    }

    pub fn architecture(self, d: usize) -> Architecture {
        match self {
            ModelKind::Cnn => Architecture::Cnn(CnnSpec::new(d)),
            ModelKind::Fcn => Architecture::Fcn(FcnSpec::new(d)),
        }
    }

    /// Training seed: `seed + 101` for the CNN, `seed + 202` for the FCN.
    pub fn training_seed(self, seed: u64) -> u64 {
        seed.wrapping_add(match self {
            ModelKind::Cnn => 101,
            ModelKind::Fcn => 202,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseConfig {
    pub harmonics: usize,
    pub tolerance: f64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self { harmonics: 10, tolerance: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionStageConfig {
    /// Signals explained per stratum (fewer if the stratum is smaller).
    pub sample_size: usize,
    /// Healthy training spectra used as the GradSHAP background.
    pub background: usize,
    /// Seed of stratum subsampling and background selection.
    pub seed: u64,
    /// Signal `i` of a stratum is explained with the method seed plus `i`.
    pub methods: Vec<AttributionConfig>,
}

impl Default for AttributionStageConfig {
    fn default() -> Self {
        Self {
            sample_size: 200,
            background: 16,
            seed: 5,
            methods: vec![
                AttributionConfig::IntegratedGradients { steps: 32 },
                AttributionConfig::GradShap { n_samples: 32, seed: 11 },
                AttributionConfig::Shapley { n_permutations: 8, group_width: 32, seed: 12, exact: false },
                AttributionConfig::Lime { n_samples: 650, group_width: 32, kernel_width: 0.75, ridge_lambda: 1.0, seed: 13 },
            ],
        }
    }
}

/// The three explanation strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    /// Holdout faults flagged by both the model and BASE.
    Detectable,
    /// Holdout faults flagged by the model but missed by BASE.
    Undetectable,
    /// Generalization-split faults flagged by the model.
    Generalization,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::Detectable, Stratum::Undetectable, Stratum::Generalization];

    pub fn name(self) -> &'static str {
        match self {
            Stratum::Detectable => "detectable",
            Stratum::Undetectable => "undetectable",
            Stratum::Generalization => "generalization",
        }
    }

    pub fn split(self) -> Split {
        match self {
            Stratum::Detectable | Stratum::Undetectable => Split::Holdout,
            Stratum::Generalization => Split::Generalize,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let cfg: Self = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ds = &self.dataset;
        let bad = |m: String| Err(HarnessError::Config(m));
        if ds.rpm_generalize == ds.rpm_train {
            return bad(format!("rpm_generalize must differ from rpm_train ({})", ds.rpm_train));
        }
        if ds.d < 2 || !ds.d.is_power_of_two() {
            return bad(format!("d must be a power of two, got {}", ds.d));
        }
        if [ds.n_train, ds.n_holdout, ds.n_real, ds.n_generalize].contains(&0) {
            return bad("every split needs at least one signal".into());
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        if self.attribution.sample_size == 0 || self.attribution.background == 0 {
            return bad("attribution sample_size and background must be positive".into());
        }
        for m in &self.attribution.methods {
            if let AttributionConfig::Lime { n_samples, group_width, .. } = m {
                let g = FeatureGroups::contiguous(ds.d, *group_width)?.len();
                if *n_samples < 10 * g {
                    return bad(format!("LIME needs n_samples >= {} for group_width {group_width}", 10 * g));
                }
            }
        }
        for split in Split::ALL {
            self.split_spec(split).bpfo_hz()?;
        }
        Ok(())
    }

    pub fn split_spec(&self, split: Split) -> DatasetSpec {
        let ds = &self.dataset;
        let (n, rpm, fault) = match split {
            Split::Train => (ds.n_train, ds.rpm_train, ds.fault.clone()),
            Split::Holdout => (ds.n_holdout, ds.rpm_train, ds.fault.clone()),
            Split::Real => (ds.n_real, ds.rpm_train, ds.real_fault.clone()),
            Split::Generalize => (ds.n_generalize, ds.rpm_generalize, ds.fault.clone()),
        };
        DatasetSpec {
            n_signals: n,
            fault_fraction: ds.fault_fraction,
            rpm,
            geometry: ds.geometry.clone(),
            fault,
            fault_noise: ds.fault_noise.clone(),
            healthy_noise: ds.healthy_noise.clone(),
            tones: ds.tones.clone(),
            d: ds.d,
            sample_rate_hz: ds.sample_rate_hz,
            seed: self.seed.wrapping_add(split.seed_offset()),
        }
    }

    pub fn bpfo_train(&self) -> Result<f64> {
        Ok(bpfo(&self.dataset.geometry, self.dataset.rpm_train / 60.0)?)
    }

    /// SHA-256 over the canonical JSON form of everything except `output_dir`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c: ExperimentConfig = toml::from_str("seed = 9\n[dataset]\nn_train = 10\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.dataset.n_train, 10);
        assert_eq!(c.dataset.d, 4096);
        assert!(toml::from_str::<ExperimentConfig>("sed = 9").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { output_dir: "elsewhere".into(), ..a.clone() };
        let c = ExperimentConfig { seed: 2, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = ExperimentConfig::default();
        c.dataset.rpm_generalize = c.dataset.rpm_train;
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
        let mut c = ExperimentConfig::default();
        c.attribution.methods = vec![AttributionConfig::Lime { n_samples: 10, group_width: 32, kernel_width: 0.75, ridge_lambda: 1.0, seed: 0 }];
        assert!(c.validate().is_err());
    }

    #[test]
    fn generalization_bpfo_scales_with_speed() {
        let c = ExperimentConfig::default();
        let train = c.split_spec(Split::Train).bpfo_hz().unwrap();
        let gen = c.split_spec(Split::Generalize).bpfo_hz().unwrap();
        assert!((gen / train - 0.6).abs() < 1e-12);
        assert_ne!(c.split_spec(Split::Train).seed, c.split_spec(Split::Holdout).seed);
    }
}
