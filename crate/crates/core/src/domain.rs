//! Invertible mapping between the time domain and the envelope spectrum.
//!
//! `x ↦ (z, r)` with `z = F(|x + iH(x)|)` and `r = arg(x + iH(x))`, and back
//! via `x = F⁻¹(z)·cos(r)`. For a fixed residual `r` the inverse is linear in
//! `z`, so any model on `x` becomes a model on `z` by prepending a bias-free
//! linear layer ([`AugmentedModel`]).

use serde::{Deserialize, Serialize};

use crate::error::{size_err, Result};
use crate::models::{Differentiable, Model};
use crate::scalar::Real;
use crate::signal::{self, PackedRealSpectrum, TimeSignal};

/// Interpretable part `z` (packed envelope spectrum) plus phase residual `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRepresentation<T> {
    pub z: PackedRealSpectrum<T>,
    pub residual: Vec<T>,
}

impl<T: Real> EnvelopeRepresentation<T> {
    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }
}

pub fn to_interpretable<T: Real>(x: &TimeSignal<T>) -> EnvelopeRepresentation<T> {
    let parts = signal::analytic_parts(x);
    let z = signal::envelope_spectrum_raw(&parts.envelope, x.sample_rate_hz())
        .expect("TimeSignal length is a power of two");
    EnvelopeRepresentation { z, residual: parts.phase }
}

pub fn from_interpretable<T: Real>(z: &PackedRealSpectrum<T>, residual: &[T]) -> Result<TimeSignal<T>> {
    let x = map_to_time(z.values(), residual)?;
    TimeSignal::new(x, z.sample_rate_hz())
}

fn map_to_time<T: Real>(z: &[T], residual: &[T]) -> Result<Vec<T>> {
    if z.len() != residual.len() {
        return size_err(format!("spectrum has {} values but residual has {}", z.len(), residual.len()));
    }
    if z.len() < 2 || !z.len().is_power_of_two() {
        return size_err(format!("length must be a power of two >= 2, got {}", z.len()));
    }
    let mut x = signal::packed_inverse(z);
    for (v, r) in x.iter_mut().zip(residual) {
        *v *= r.cos();
    }
    Ok(x)
}

/// The fixed linear map `A: z ↦ F⁻¹(z)·cos(r)` for one residual.
#[derive(Debug, Clone)]
pub struct PhaseMap<T> {
    cos_residual: Vec<T>,
    sample_rate_hz: f64,
}

impl<T: Real> PhaseMap<T> {
    pub fn new(residual: &[T], sample_rate_hz: f64) -> Result<Self> {
        let d = residual.len();
        if d < 2 || !d.is_power_of_two() {
            return size_err(format!("residual length must be a power of two >= 2, got {d}"));
        }
        Ok(Self { cos_residual: residual.iter().map(|r| r.cos()).collect(), sample_rate_hz })
    }

    pub fn len(&self) -> usize {
        self.cos_residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cos_residual.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// `A·z`.
    pub fn apply(&self, z: &[T]) -> Result<Vec<T>> {
        self.check(z.len())?;
        let mut x = signal::packed_inverse(z);
        for (v, c) in x.iter_mut().zip(&self.cos_residual) {
            *v *= *c;
        }
        Ok(x)
    }

    /// `Aᵀ·y`: pointwise `cos(r)` then the adjoint of the packed inverse DFT.
    pub fn apply_adjoint(&self, y: &[T]) -> Result<Vec<T>> {
        self.check(y.len())?;
        let weighted: Vec<T> = y.iter().zip(&self.cos_residual).map(|(&v, &c)| v * c).collect();
        Ok(signal::packed_inverse_adjoint(&weighted))
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.cos_residual.len() {
            return size_err(format!("expected length {}, got {n}", self.cos_residual.len()));
        }
        Ok(())
    }
}

/// `f̃(z; r) = f(F⁻¹(z)·cos(r))` with `r` frozen at construction.
pub struct AugmentedModel<'a, T, M: ?Sized> {
    inner: &'a M,
    map: PhaseMap<T>,
}

impl<'a, T: Real, M: Model<T> + ?Sized> AugmentedModel<'a, T, M> {
    pub fn map(&self) -> &PhaseMap<T> {
        &self.map
    }

    pub fn inner(&self) -> &M {
        self.inner
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.map.sample_rate_hz
    }
}

/// Wrap `model` so it takes packed envelope spectra as input.
pub fn augment<'a, T: Real, M: Model<T> + ?Sized>(
    model: &'a M,
    residual: &[T],
    sample_rate_hz: f64,
) -> Result<AugmentedModel<'a, T, M>> {
    if model.input_len() != residual.len() {
        return size_err(format!(
            "model expects {} inputs but residual has length {}",
            model.input_len(),
            residual.len()
        ));
    }
    Ok(AugmentedModel { inner: model, map: PhaseMap::new(residual, sample_rate_hz)? })
}

impl<T: Real, M: Model<T> + ?Sized> Model<T> for AugmentedModel<'_, T, M> {
    fn input_len(&self) -> usize {
        self.map.len()
    }

    fn predict(&self, z: &[T]) -> Result<T> {
        self.inner.predict(&self.map.apply(z)?)
    }
}

impl<T: Real, M: Differentiable<T> + ?Sized> Differentiable<T> for AugmentedModel<'_, T, M> {
    fn value_and_gradient(&self, z: &[T]) -> Result<(T, Vec<T>)> {
        let (v, gx) = self.inner.value_and_gradient(&self.map.apply(z)?)?;
        Ok((v, self.map.apply_adjoint(&gx)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_vec(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn tone_decomposition() {
        let d = 256;
        let k = 10;
        let x: Vec<f64> = (0..d).map(|n| (2.0 * PI * (k * n) as f64 / d as f64).cos()).collect();
        let rep = to_interpretable(&TimeSignal::new(x, 256.0).unwrap());
        assert!((rep.z.values()[0] - d as f64).abs() < 1e-8);
        assert!(rep.z.values()[1..].iter().all(|v| v.abs() < 1e-8));
        for (n, r) in rep.residual.iter().enumerate() {
            let expected = (2.0 * PI * (k * n) as f64 / d as f64).sin().atan2((2.0 * PI * (k * n) as f64 / d as f64).cos());
            let diff = (r - expected).rem_euclid(2.0 * PI);
            assert!(diff < 1e-9 || 2.0 * PI - diff < 1e-9, "n={n}: {r} vs {expected}");
        }
    }

    #[test]
    fn zero_signal() {
        let rep = to_interpretable(&TimeSignal::new(vec![0.0f64; 64], 64.0).unwrap());
        assert!(rep.z.values().iter().all(|&v| v == 0.0));
        assert!(rep.residual.iter().all(|&v| v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_vec(64, &mut rng);
        let x = from_interpretable(&PackedRealSpectrum::zeros(64, 64.0).unwrap(), &r).unwrap();
        assert!(x.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_spectrum_with_linear_phase_is_tone() {
        let d = 128;
        let k = 7;
        let mut z = vec![0.0; d];
        z[0] = d as f64;
        let r: Vec<f64> = (0..d).map(|n| 2.0 * PI * (k * n) as f64 / d as f64).collect();
        let x = from_interpretable(&PackedRealSpectrum::new(z, 128.0).unwrap(), &r).unwrap();
        let expected: Vec<f64> = r.iter().map(|p| p.cos()).collect();
        assert!(max_abs_diff(x.samples(), &expected) < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let z = PackedRealSpectrum::zeros(64, 1.0).unwrap();
        assert!(from_interpretable(&z, &[0.0; 32]).is_err());
        let m = LinearModel::new(vec![1.0; 32], 0.0, false);
        assert!(augment(&m, &[0.0; 64], 1.0).is_err());
    }

    #[test]
    fn linear_model_gradient_is_adjoint_of_weights() {
        let d = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_vec(d, &mut rng);
        let r = random_vec(d, &mut rng);
        let model = LinearModel::new(w.clone(), 0.3, false);
        let aug = augment(&model, &r, 64.0).unwrap();
        let expected = aug.map().apply_adjoint(&w).unwrap();
        for _ in 0..3 {
            let z = random_vec(d, &mut rng);
            let g = aug.gradient(&z).unwrap();
            assert_eq!(g, expected);
        }
    }

    #[test]
    fn augmented_prediction_equals_original() {
        let d = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = LinearModel::new(random_vec(d, &mut rng), 0.1, true);
        for _ in 0..100 {
            let x = TimeSignal::new(random_vec(d, &mut rng), 256.0).unwrap();
            let rep = to_interpretable(&x);
            let aug = augment(&model, &rep.residual, 256.0).unwrap();
            let a = aug.predict(rep.z.values()).unwrap();
            let b = model.predict(x.samples()).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = LinearModel::new(random_vec(d, &mut rng), 0.0, true);
        let x = TimeSignal::new(random_vec(d, &mut rng), 128.0).unwrap();
        let rep = to_interpretable(&x);
        let aug = augment(&model, &rep.residual, 128.0).unwrap();
        let z = rep.z.values().to_vec();
        let g = aug.gradient(&z).unwrap();
        let h = 1e-4;
        for _ in 0..20 {
            let i = rng.gen_range(0..d);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let fd = (aug.predict(&zp).unwrap() - aug.predict(&zm).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-4 * fd.abs().max(g[i].abs()).max(1e-8), "i={i}: {fd} vs {}", g[i]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip(seed in any::<u64>(), log_d in 2u32..11) {
            let d = 1usize << log_d;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = TimeSignal::new(random_vec(d, &mut rng), 1000.0).unwrap();
            let rep = to_interpretable(&x);
            let back = from_interpretable(&rep.z, &rep.residual).unwrap();
            prop_assert!(max_abs_diff(back.samples(), x.samples()) < 1e-9);
        }

        #[test]
        fn adjoint_dot_product(seed in any::<u64>(), log_d in 2u32..11) {
            let d = 1usize << log_d;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = PhaseMap::new(&random_vec(d, &mut rng), 1.0).unwrap();
            let z = random_vec(d, &mut rng);
            let y = random_vec(d, &mut rng);
            let lhs: f64 = map.apply(&z).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = z.iter().zip(map.apply_adjoint(&y).unwrap()).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1e-12));
        }

        #[test]
        fn linear_in_spectrum(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let d = 256;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = random_vec(d, &mut rng);
            let z1 = random_vec(d, &mut rng);
            let z2 = random_vec(d, &mut rng);
            let comb: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| alpha * a + beta * b).collect();
            let map = |z: &[f64]| map_to_time(z, &r).unwrap();
            let lhs = map(&comb);
            let rhs: Vec<f64> = map(&z1).iter().zip(map(&z2)).map(|(a, b)| alpha * a + beta * b).collect();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
        }
    }
}
