//! Synthetic healthy and outer-ring-fault vibration signals.
//!
//! Fault signals are a jittered impulse train at the outer-race ball passing
//! frequency, convolved with a decaying resonance, plus white noise. Healthy
//! signals are noise plus optional rotation-harmonic tones. Every generated
//! signal is peak-normalized to `[-1, 1]`.
//!
//! # Dataset container
//!
//! A dataset is stored as two files sharing a stem:
//!
//! * `<stem>.json`: manifest ([`DatasetManifest`]) with `n`, `d`,
//!   `sample_rate_hz`, the data file name and per-signal `label`, `rpm`,
//!   `bpfo_hz`, `rotation_hz`, `noise_std`;
//! * `<stem>.f32`: `n·d` little-endian IEEE-754 `f32` samples, signal-major
//!   (signal `i` occupies bytes `4·d·i .. 4·d·(i+1)`), no header.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::TimeSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearingGeometry {
    pub n_rolling_elements: usize,
    /// mm
    pub ball_diameter: f64,
    /// mm
    pub pitch_diameter: f64,
    /// radians
    pub contact_angle: f64,
}

impl BearingGeometry {
    pub fn new(n_rolling_elements: usize, ball_diameter: f64, pitch_diameter: f64, contact_angle: f64) -> Result<Self> {
        let g = Self { n_rolling_elements, ball_diameter, pitch_diameter, contact_angle };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rolling_elements < 3 {
            return Err(Error::Config(format!("need at least 3 rolling elements, got {}", self.n_rolling_elements)));
        }
        if !(self.ball_diameter > 0.0 && self.ball_diameter < self.pitch_diameter && self.contact_angle.is_finite()) {
            return Err(Error::Config(format!(
                "invalid geometry: ball {} mm, pitch {} mm, angle {}",
                self.ball_diameter, self.pitch_diameter, self.contact_angle
            )));
        }
        Ok(())
    }
}

impl Default for BearingGeometry {
    /// 8 elements, ball/pitch ratio 0.3, zero contact angle: 70 Hz at 1500 rpm.
    fn default() -> Self {
        Self { n_rolling_elements: 8, ball_diameter: 9.0, pitch_diameter: 30.0, contact_angle: 0.0 }
    }
}

/// Outer-race ball passing frequency in Hz.
pub fn bpfo(geometry: &BearingGeometry, rotation_hz: f64) -> Result<f64> {
    geometry.validate()?;
    if !(rotation_hz > 0.0 && rotation_hz.is_finite()) {
        return Err(Error::Config(format!("rotation frequency must be positive, got {rotation_hz}")));
    }
    let ratio = geometry.ball_diameter / geometry.pitch_diameter;
    Ok(geometry.n_rolling_elements as f64 / 2.0 * rotation_hz * (1.0 - ratio * geometry.contact_angle.cos()))
}

/// Sinusoids at `k·rotation_hz` with amplitude `amplitudes[k-1]` and random phase.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToneParams {
    pub amplitudes: Vec<f64>,
}

impl ToneParams {
    fn add(&self, out: &mut [f64], rotation_hz: f64, fs: f64, rng: &mut ChaCha8Rng) {
        for (k, &a) in self.amplitudes.iter().enumerate() {
            let f = (k + 1) as f64 * rotation_hz;
            let phase = rng.gen_range(0.0..2.0 * PI);
            if a == 0.0 || f >= fs / 2.0 {
                continue;
            }
            for (n, v) in out.iter_mut().enumerate() {
                *v += a * (2.0 * PI * f * n as f64 / fs + phase).sin();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSignalParams {
    pub bpfo_hz: f64,
    pub resonance_hz: f64,
    /// 1/s
    pub decay_rate: f64,
    pub impulse_amplitude: f64,
    /// Uniform arrival jitter as a fraction of the impact period, at most 0.05.
    pub jitter_fraction: f64,
    pub noise_std: f64,
    pub rotation_hz: f64,
    #[serde(default)]
    pub tones: ToneParams,
}

impl FaultSignalParams {
    /// 3 kHz resonance, 800/s decay, 1% jitter, no noise or tones.
    pub fn new(bpfo_hz: f64, rotation_hz: f64) -> Self {
        Self {
            bpfo_hz,
            resonance_hz: 3000.0,
            decay_rate: 800.0,
            impulse_amplitude: 1.0,
            jitter_fraction: 0.01,
            noise_std: 0.0,
            rotation_hz,
            tones: ToneParams::default(),
        }
    }

    fn validate(&self, fs: f64) -> Result<()> {
        let positive = [self.bpfo_hz, self.resonance_hz, self.decay_rate, self.impulse_amplitude, self.rotation_hz];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("fault parameters must be positive: {self:?}")));
        }
        if !(0.0..=0.05).contains(&self.jitter_fraction) || !(self.noise_std >= 0.0) {
            return Err(Error::Config(format!(
                "jitter must lie in [0, 0.05] and noise_std be nonnegative (jitter {}, noise {})",
                self.jitter_fraction, self.noise_std
            )));
        }
        if !(self.resonance_hz < fs / 2.0 && self.bpfo_hz < self.resonance_hz) {
            return Err(Error::Config(format!(
                "need bpfo {} < resonance {} < Nyquist {}",
                self.bpfo_hz,
                self.resonance_hz,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthyParams {
    pub noise_std: f64,
    pub rotation_hz: f64,
    #[serde(default)]
    pub tones: ToneParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Healthy,
    Fault,
}

impl Label {
    pub fn is_fault(self) -> bool {
        self == Label::Fault
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSignal<T> {
    pub signal: TimeSignal<T>,
    pub label: Label,
    /// Characteristic fault frequency of the bearing at this speed, also
    /// recorded for healthy signals.
    pub bpfo_hz: f64,
    pub rotation_hz: f64,
    pub noise_std: f64,
}

impl<T> LabeledSignal<T> {
    pub fn rpm(&self) -> f64 {
        self.rotation_hz * 60.0
    }
}

fn check_shape(d: usize, fs: f64) -> Result<()> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::Size(format!("signal length must be a power of two >= 2, got {d}")));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::Config(format!("sample rate must be positive, got {fs}")));
    }
    Ok(())
}

fn add_noise(out: &mut [f64], std: f64, rng: &mut ChaCha8Rng) {
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("std is positive and finite");
        for v in out.iter_mut() {
            *v += normal.sample(rng);
        }
    }
}

fn normalize<T: Real>(mut x: Vec<f64>, fs: f64) -> Result<TimeSignal<T>> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
    TimeSignal::new(x.into_iter().map(T::of).collect(), fs)
}

pub fn synthesize_fault<T: Real>(params: &FaultSignalParams, d: usize, sample_rate_hz: f64, seed: u64) -> Result<LabeledSignal<T>> {
    check_shape(d, sample_rate_hz)?;
    params.validate(sample_rate_hz)?;
    let fs = sample_rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = 1.0 / params.bpfo_hz;
    // response is negligible once e^{-a·t} < 1e-7
    let tail = ((16.0 / params.decay_rate) * fs).ceil() as usize;
    let duration = d as f64 / fs;
    let mut x = vec![0.0; d];

    // first impact can lie before t=0 so its ringing enters the window
    let mut nominal = -rng.gen_range(0.0..period) - (tail as f64 / fs / period).floor() * period;
    while nominal < duration {
        let jitter = params.jitter_fraction * period;
        let t0 = nominal + if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
        let first = (t0 * fs).ceil().max(0.0) as usize;
        let last = (((t0 * fs).ceil() as isize + tail as isize).max(0) as usize).min(d);
        for (n, v) in x.iter_mut().enumerate().take(last).skip(first) {
            let t = n as f64 / fs - t0;
            *v += params.impulse_amplitude * (-params.decay_rate * t).exp() * (2.0 * PI * params.resonance_hz * t).sin();
        }
        nominal += period;
    }
    params.tones.add(&mut x, params.rotation_hz, fs, &mut rng);
    add_noise(&mut x, params.noise_std, &mut rng);
    Ok(LabeledSignal {
        signal: normalize(x, fs)?,
        label: Label::Fault,
        bpfo_hz: params.bpfo_hz,
        rotation_hz: params.rotation_hz,
        noise_std: params.noise_std,
    })
}

/// `bpfo_hz` is carried through as metadata only.
pub fn synthesize_healthy<T: Real>(
    params: &HealthyParams,
    bpfo_hz: f64,
    d: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<LabeledSignal<T>> {
    check_shape(d, sample_rate_hz)?;
    if !(params.noise_std >= 0.0 && params.rotation_hz > 0.0) {
        return Err(Error::Config(format!("invalid healthy parameters: {params:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    params.tones.add(&mut x, params.rotation_hz, sample_rate_hz, &mut rng);
    add_noise(&mut x, params.noise_std, &mut rng);
    Ok(LabeledSignal {
        signal: normalize(x, sample_rate_hz)?,
        label: Label::Healthy,
        bpfo_hz,
        rotation_hz: params.rotation_hz,
        noise_std: params.noise_std,
    })
}

/// Fault-model constants shared by all fault signals of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultModel {
    pub resonance_hz: f64,
    pub decay_rate: f64,
    pub impulse_amplitude: f64,
    pub jitter_fraction: f64,
}

impl Default for FaultModel {
    fn default() -> Self {
        Self { resonance_hz: 3000.0, decay_rate: 800.0, impulse_amplitude: 1.0, jitter_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_signals: usize,
    pub fault_fraction: f64,
    pub rpm: f64,
    #[serde(default)]
    pub geometry: BearingGeometry,
    #[serde(default)]
    pub fault: FaultModel,
    /// Fault `i` gets `fault_noise[i % len]`.
    pub fault_noise: Vec<f64>,
    /// Healthy `i` gets `healthy_noise[i % len]`.
    pub healthy_noise: Vec<f64>,
    #[serde(default)]
    pub tones: ToneParams,
    pub d: usize,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn n_faults(&self) -> usize {
        (self.n_signals as f64 * self.fault_fraction).round() as usize
    }

    pub fn rotation_hz(&self) -> f64 {
        self.rpm / 60.0
    }

    pub fn bpfo_hz(&self) -> Result<f64> {
        bpfo(&self.geometry, self.rotation_hz())
    }
}

/// Generate and shuffle a labeled dataset. Signal `i` (before shuffling,
/// faults first) is seeded with `seed + i`.
pub fn make_dataset<T: Real>(spec: &DatasetSpec) -> Result<Vec<LabeledSignal<T>>> {
    if spec.n_signals == 0 {
        return Err(Error::Config("dataset must contain at least one signal".into()));
    }
    if !(0.0..=1.0).contains(&spec.fault_fraction) {
        return Err(Error::Config(format!("fault fraction must lie in [0, 1], got {}", spec.fault_fraction)));
    }
    let n_faults = spec.n_faults();
    if (n_faults > 0 && spec.fault_noise.is_empty()) || (n_faults < spec.n_signals && spec.healthy_noise.is_empty()) {
        return Err(Error::Config("noise level lists must be nonempty for every class present".into()));
    }
    let bpfo_hz = spec.bpfo_hz()?;
    let rot = spec.rotation_hz();
    let mut out = Vec::with_capacity(spec.n_signals);
    for i in 0..spec.n_signals {
        let seed = spec.seed.wrapping_add(i as u64);
        let s = if i < n_faults {
            let p = FaultSignalParams {
                bpfo_hz,
                resonance_hz: spec.fault.resonance_hz,
                decay_rate: spec.fault.decay_rate,
                impulse_amplitude: spec.fault.impulse_amplitude,
                jitter_fraction: spec.fault.jitter_fraction,
                noise_std: spec.fault_noise[i % spec.fault_noise.len()],
                rotation_hz: rot,
                tones: spec.tones.clone(),
            };
            synthesize_fault(&p, spec.d, spec.sample_rate_hz, seed)?
        } else {
            let j = i - n_faults;
            let p = HealthyParams {
                noise_std: spec.healthy_noise[j % spec.healthy_noise.len()],
                rotation_hz: rot,
                tones: spec.tones.clone(),
            };
            synthesize_healthy(&p, bpfo_hz, spec.d, spec.sample_rate_hz, seed)?
        };
        out.push(s);
    }
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed ^ 0x0da7_a5e7));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub label: Label,
    pub rpm: f64,
    pub bpfo_hz: f64,
    pub rotation_hz: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub sample_rate_hz: f64,
    /// File name of the sample data, relative to the manifest.
    pub data_file: String,
    pub signals: Vec<SignalRecord>,
}

impl DatasetManifest {
    pub const FORMAT: &'static str = "envex-dataset";
    pub const VERSION: u32 = 1;
}

fn data_path(stem: &Path) -> PathBuf {
    stem.with_extension("f32")
}

/// Write `<stem>.json` and `<stem>.f32`. Samples are stored as `f32`.
pub fn save_dataset<T: Real>(stem: &Path, signals: &[LabeledSignal<T>]) -> Result<()> {
    let first = signals.first().ok_or_else(|| Error::Config("cannot save an empty dataset".into()))?;
    let (d, fs) = (first.signal.len(), first.signal.sample_rate_hz());
    if let Some(i) = signals.iter().position(|s| s.signal.len() != d || s.signal.sample_rate_hz() != fs) {
        return Err(Error::Size(format!("signal {i} differs in length or sample rate from signal 0")));
    }
    let data = data_path(stem);
    let mut bytes = Vec::with_capacity(4 * d * signals.len());
    for s in signals {
        for v in s.signal.samples() {
            bytes.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    std::fs::write(&data, bytes)?;
    let manifest = DatasetManifest {
        format: DatasetManifest::FORMAT.into(),
        version: DatasetManifest::VERSION,
        n: signals.len(),
        d,
        sample_rate_hz: fs,
        data_file: data.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
        signals: signals
            .iter()
            .map(|s| SignalRecord {
                label: s.label,
                rpm: s.rpm(),
                bpfo_hz: s.bpfo_hz,
                rotation_hz: s.rotation_hz,
                noise_std: s.noise_std,
            })
            .collect(),
    };
    std::fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_dataset<T: Real>(stem: &Path) -> Result<(DatasetManifest, Vec<LabeledSignal<T>>)> {
    let manifest: DatasetManifest = serde_json::from_slice(&std::fs::read(stem.with_extension("json"))?)?;
    if manifest.format != DatasetManifest::FORMAT || manifest.version != DatasetManifest::VERSION {
        return Err(Error::Format(format!("{} is not a v{} dataset manifest", stem.display(), DatasetManifest::VERSION)));
    }
    if manifest.signals.len() != manifest.n {
        return Err(Error::Format(format!("manifest lists {} signals but n = {}", manifest.signals.len(), manifest.n)));
    }
    let dir = stem.parent().unwrap_or_else(|| Path::new("."));
    let bytes = std::fs::read(dir.join(&manifest.data_file))?;
    if bytes.len() != 4 * manifest.n * manifest.d {
        return Err(Error::Format(format!("data file has {} bytes, expected {}", bytes.len(), 4 * manifest.n * manifest.d)));
    }
    let signals = manifest
        .signals
        .iter()
        .zip(bytes.chunks_exact(4 * manifest.d))
        .map(|(r, chunk)| {
            let samples = chunk
                .chunks_exact(4)
                .map(|b| T::of(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64))
                .collect();
            Ok(LabeledSignal {
                signal: TimeSignal::new(samples, manifest.sample_rate_hz)?,
                label: r.label,
                bpfo_hz: r.bpfo_hz,
                rotation_hz: r.rotation_hz,
                noise_std: r.noise_std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, signals))
}
