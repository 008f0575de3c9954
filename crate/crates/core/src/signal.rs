//! Spectral primitives: radix-2 DFT, discrete Hilbert transform, analytic
//! envelope and the packed real envelope spectrum.
//!
//! Conventions used throughout the crate:
//!
//! * forward DFT is unnormalized, `X[k] = Σ x[n]·e^{-2πikn/d}`;
//! * inverse DFT carries the `1/d` factor;
//! * the Hilbert transform keeps DC and Nyquist real, so the real part of the
//!   analytic signal equals the input exactly.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{size_err, Error, Result};
use crate::scalar::Real;

/// Real-valued signal of power-of-two length at a fixed sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSignal<T> {
    samples: Vec<T>,
    sample_rate_hz: f64,
}

impl<T: Real> TimeSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: f64) -> Result<Self> {
        check_len(samples.len())?;
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Frequency spacing of the DFT grid, `sample_rate / d`.
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / self.samples.len() as f64
    }

    pub fn cast<U: Real>(&self) -> TimeSignal<U> {
        TimeSignal {
            samples: crate::scalar::cast_slice(&self.samples),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Full-length complex DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum<T> {
    pub coefficients: Vec<Complex<T>>,
}

impl<T: Real> ComplexSpectrum<T> {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Largest deviation from `C[k] = conj(C[d-k])`, relative to the largest
    /// coefficient magnitude.
    pub fn conjugate_symmetry_error(&self) -> T {
        let d = self.coefficients.len();
        let scale = self
            .coefficients
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), T::max)
            .max(T::min_positive_value());
        (0..d)
            .map(|k| (self.coefficients[k] - self.coefficients[(d - k) % d].conj()).norm())
            .fold(T::zero(), T::max)
            / scale
    }

    /// Inverse DFT without discarding the imaginary part.
    pub fn inverse_complex(&self) -> Result<Vec<Complex<T>>> {
        let mut buf = self.coefficients.clone();
        fft_in_place(&mut buf, true)?;
        Ok(buf)
    }
}

/// Half spectrum of a real length-`d` signal packed into `d` reals:
/// `[Re0, Re1, Im1, ..., Re(d/2-1), Im(d/2-1), Re(d/2)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedRealSpectrum<T> {
    values: Vec<T>,
    sample_rate_hz: f64,
}

impl<T: Real> PackedRealSpectrum<T> {
    pub fn new(values: Vec<T>, sample_rate_hz: f64) -> Result<Self> {
        check_len(values.len())?;
        Ok(Self { values, sample_rate_hz })
    }

    pub fn zeros(d: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![T::zero(); d], sample_rate_hz)
    }

    /// Pack bins `0..=d/2` of a conjugate-symmetric spectrum of a real signal.
    pub fn from_spectrum(spec: &ComplexSpectrum<T>, sample_rate_hz: f64) -> Result<Self> {
        let d = spec.len();
        check_len(d)?;
        let mut values = vec![T::zero(); d];
        values[0] = spec.coefficients[0].re;
        for b in 1..d / 2 {
            values[2 * b - 1] = spec.coefficients[b].re;
            values[2 * b] = spec.coefficients[b].im;
        }
        values[d - 1] = spec.coefficients[d / 2].re;
        Ok(Self { values, sample_rate_hz })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Number of frequency bins, `d/2 + 1`.
    pub fn n_bins(&self) -> usize {
        self.values.len() / 2 + 1
    }

    pub fn bin_frequency_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate_hz / self.values.len() as f64
    }

    /// Complex coefficient of `bin` in `0..=d/2`.
    pub fn bin(&self, bin: usize) -> Complex<T> {
        let d = self.values.len();
        let (re, im) = packed_slots(d, bin);
        Complex::new(self.values[re], im.map_or(T::zero(), |i| self.values[i]))
    }

    /// Full conjugate-symmetric spectrum.
    pub fn to_spectrum(&self) -> ComplexSpectrum<T> {
        ComplexSpectrum { coefficients: unpack_full(&self.values) }
    }

    /// Real inverse DFT (with the `1/d` factor) of the packed spectrum.
    pub fn inverse(&self) -> Vec<T> {
        packed_inverse(&self.values)
    }
}

/// Packed slots `(re, im)` holding frequency bin `bin` of a length-`d` real
/// spectrum. DC and Nyquist have no imaginary slot.
pub fn packed_slots(d: usize, bin: usize) -> (usize, Option<usize>) {
    debug_assert!(bin <= d / 2);
    if bin == 0 {
        (0, None)
    } else if bin == d / 2 {
        (d - 1, None)
    } else {
        (2 * bin - 1, Some(2 * bin))
    }
}

/// Frequency bin addressed by a packed slot.
pub fn slot_bin(d: usize, slot: usize) -> usize {
    if slot == 0 {
        0
    } else if slot == d - 1 {
        d / 2
    } else {
        slot.div_ceil(2)
    }
}

fn check_len(d: usize) -> Result<()> {
    if d < 2 || !d.is_power_of_two() {
        return size_err(format!("length must be a power of two >= 2, got {d}"));
    }
    Ok(())
}

fn unpack_full<T: Real>(values: &[T]) -> Vec<Complex<T>> {
    let d = values.len();
    let mut full = vec![Complex::new(T::zero(), T::zero()); d];
    full[0] = Complex::new(values[0], T::zero());
    for b in 1..d / 2 {
        let c = Complex::new(values[2 * b - 1], values[2 * b]);
        full[b] = c;
        full[d - b] = c.conj();
    }
    full[d / 2] = Complex::new(values[d - 1], T::zero());
    full
}

pub(crate) fn packed_inverse<T: Real>(values: &[T]) -> Vec<T> {
    let mut full = unpack_full(values);
    fft_in_place(&mut full, true).expect("packed length validated on construction");
    full.into_iter().map(|c| c.re).collect()
}

/// Adjoint of [`packed_inverse`]: for `y ∈ ℝ^d`, returns `Aᵀy` where `A` maps
/// packed coefficients to the real signal.
pub(crate) fn packed_inverse_adjoint<T: Real>(y: &[T]) -> Vec<T> {
    let d = y.len();
    let mut buf: Vec<Complex<T>> = y.iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_in_place(&mut buf, false).expect("length validated by caller");
    let inv_d = T::one() / T::of_usize(d);
    let two_inv_d = inv_d + inv_d;
    let mut out = vec![T::zero(); d];
    out[0] = buf[0].re * inv_d;
    for b in 1..d / 2 {
        out[2 * b - 1] = buf[b].re * two_inv_d;
        out[2 * b] = buf[b].im * two_inv_d;
    }
    out[d - 1] = buf[d / 2].re * inv_d;
    out
}

/// In-place iterative radix-2 DFT. `inverse` selects `e^{+i}` twiddles and the
/// `1/d` normalization.
pub fn fft_in_place<T: Real>(buf: &mut [Complex<T>], inverse: bool) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return size_err(format!("FFT length must be a power of two, got {n}"));
    }
    if n == 1 {
        return Ok(());
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }

    // Twiddles evaluated directly rather than by repeated multiplication so
    // that error stays at a few ulps for large n.
    let sign = if inverse { T::one() } else { -T::one() };
    let step = sign * T::TAU() / T::of_usize(n);
    let twiddles: Vec<Complex<T>> = (0..n / 2)
        .map(|k| {
            let a = step * T::of_usize(k);
            Complex::new(a.cos(), a.sin())
        })
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let u = buf[start + k];
                let v = buf[start + k + half] * w;
                buf[start + k] = u + v;
                buf[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }

    if inverse {
        let scale = T::one() / T::of_usize(n);
        for c in buf.iter_mut() {
            *c = *c * scale;
        }
    }
    Ok(())
}

fn real_fft<T: Real>(x: &[T]) -> Result<Vec<Complex<T>>> {
    let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_in_place(&mut buf, false)?;
    Ok(buf)
}

/// Forward DFT of a real signal.
pub fn fft<T: Real>(x: &TimeSignal<T>) -> ComplexSpectrum<T> {
    ComplexSpectrum {
        coefficients: real_fft(x.samples()).expect("TimeSignal length is a power of two"),
    }
}

/// Inverse DFT; the imaginary part is discarded.
pub fn ifft<T: Real>(spec: &ComplexSpectrum<T>, sample_rate_hz: f64) -> Result<TimeSignal<T>> {
    let buf = spec.inverse_complex()?;
    TimeSignal::new(buf.into_iter().map(|c| c.re).collect(), sample_rate_hz)
}

/// Analytic signal `x + iH(x)` of a real slice of power-of-two length.
pub fn analytic_signal<T: Real>(x: &[T]) -> Result<Vec<Complex<T>>> {
    let n = x.len();
    check_len(n)?;
    let mut buf = real_fft(x)?;
    let two = T::one() + T::one();
    for c in &mut buf[1..n / 2] {
        *c = *c * two;
    }
    for c in &mut buf[n / 2 + 1..] {
        *c = Complex::new(T::zero(), T::zero());
    }
    fft_in_place(&mut buf, true)?;
    // Re(analytic) is x by construction; pin it to remove rounding noise.
    for (c, &v) in buf.iter_mut().zip(x) {
        c.re = v;
    }
    Ok(buf)
}

/// Discrete Hilbert transform: positive frequencies times `-i`, negative
/// frequencies times `+i`, DC and Nyquist zeroed.
pub fn hilbert<T: Real>(x: &TimeSignal<T>) -> TimeSignal<T> {
    let a = analytic_signal(x.samples()).expect("TimeSignal length is a power of two");
    TimeSignal {
        samples: a.into_iter().map(|c| c.im).collect(),
        sample_rate_hz: x.sample_rate_hz(),
    }
}

/// Envelope and instantaneous phase of the analytic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticParts<T> {
    pub envelope: Vec<T>,
    pub phase: Vec<T>,
}

/// Below this envelope magnitude the phase is set to zero.
pub const ZERO_ENVELOPE: f64 = 1e-12;

pub(crate) fn analytic_parts_raw<T: Real>(x: &[T]) -> Result<AnalyticParts<T>> {
    let a = analytic_signal(x)?;
    let eps = T::of(ZERO_ENVELOPE);
    let mut envelope = Vec::with_capacity(a.len());
    let mut phase = Vec::with_capacity(a.len());
    for c in a {
        let m = c.norm();
        envelope.push(m);
        phase.push(if m < eps { T::zero() } else { wrap_phase(c.im.atan2(c.re)) });
    }
    Ok(AnalyticParts { envelope, phase })
}

/// `atan2` yields `[-π, π]`; map `-π` onto `π` so phases live in `(-π, π]`.
fn wrap_phase<T: Real>(p: T) -> T {
    if p <= -T::PI() {
        T::PI()
    } else {
        p
    }
}

pub fn analytic_parts<T: Real>(x: &TimeSignal<T>) -> AnalyticParts<T> {
    analytic_parts_raw(x.samples()).expect("TimeSignal length is a power of two")
}

pub(crate) fn envelope_spectrum_raw<T: Real>(envelope: &[T], sample_rate_hz: f64) -> Result<PackedRealSpectrum<T>> {
    let spec = ComplexSpectrum { coefficients: real_fft(envelope)? };
    PackedRealSpectrum::from_spectrum(&spec, sample_rate_hz)
}

/// DFT of the analytic envelope, packed into `d` reals.
pub fn envelope_spectrum<T: Real>(x: &TimeSignal<T>) -> PackedRealSpectrum<T> {
    let parts = analytic_parts(x);
    envelope_spectrum_raw(&parts.envelope, x.sample_rate_hz()).expect("length already validated")
}

/// Squared magnitude of each envelope-spectrum bin `0..=d/2`.
pub fn bin_power<T: Real>(z: &PackedRealSpectrum<T>) -> Vec<T> {
    (0..z.n_bins()).map(|b| z.bin(b).norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[f64]) -> Vec<Complex<f64>> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (j, &v)| {
                    let a = -2.0 * std::f64::consts::PI * (k * j % n) as f64 / n as f64;
                    acc + Complex::new(a.cos(), a.sin()) * v
                })
            })
            .collect()
    }

    fn random_signal(d: usize, seed: u64) -> TimeSignal<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSignal::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(), 1000.0).unwrap()
    }

    fn tone(d: usize, k: usize, amp: f64, f: fn(f64) -> f64) -> TimeSignal<f64> {
        let s = (0..d)
            .map(|n| amp * f(2.0 * std::f64::consts::PI * (k * n) as f64 / d as f64))
            .collect();
        TimeSignal::new(s, d as f64).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(matches!(TimeSignal::new(vec![0.0f64; 6], 1.0), Err(Error::Size(_))));
        assert!(matches!(TimeSignal::new(vec![0.0f64; 1], 1.0), Err(Error::Size(_))));
        let mut buf = vec![Complex::new(0.0f64, 0.0); 12];
        assert!(fft_in_place(&mut buf, false).is_err());
        let spec = ComplexSpectrum { coefficients: vec![Complex::new(1.0f64, 0.0); 3] };
        assert!(ifft(&spec, 1.0).is_err());
    }

    #[test]
    fn impulse_is_flat() {
        let x = TimeSignal::new(vec![1.0, 0.0, 0.0, 0.0], 4.0).unwrap();
        let spec = fft(&x);
        for c in &spec.coefficients {
            assert!((c - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
        let back = ifft(&ComplexSpectrum { coefficients: vec![Complex::new(1.0, 0.0); 4] }, 4.0).unwrap();
        assert!(max_abs_diff(back.samples(), &[1.0, 0.0, 0.0, 0.0]) < 1e-15);
    }

    #[test]
    fn single_tone_bins() {
        let x = tone(8, 1, 1.0, f64::cos);
        let spec = fft(&x);
        for (k, c) in spec.coefficients.iter().enumerate() {
            let expected = if k == 1 || k == 7 { 4.0 } else { 0.0 };
            assert!((c.norm() - expected).abs() < 1e-12, "bin {k}: {}", c.norm());
        }
    }

    #[test]
    fn matches_naive_dft() {
        let x = random_signal(64, 7);
        let fast = fft(&x);
        let slow = naive_dft(x.samples());
        let err = fast.coefficients.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn inverse_round_trip_sizes() {
        for (d, seed) in [(8usize, 1u64), (256, 2), (4096, 3)] {
            let x = random_signal(d, seed);
            let back = ifft(&fft(&x), x.sample_rate_hz()).unwrap();
            assert!(max_abs_diff(x.samples(), back.samples()) < 1e-9);
        }
    }

    #[test]
    fn symmetric_spectrum_inverts_to_real() {
        let d = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut c = vec![Complex::new(0.0f64, 0.0); d];
        c[0] = Complex::new(rng.gen_range(-1.0..1.0), 0.0);
        c[d / 2] = Complex::new(rng.gen_range(-1.0..1.0), 0.0);
        for k in 1..d / 2 {
            let v = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            c[k] = v;
            c[d - k] = v.conj();
        }
        let spec = ComplexSpectrum { coefficients: c };
        assert!(spec.conjugate_symmetry_error() < 1e-15);
        let out = spec.inverse_complex().unwrap();
        let residue = out.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(residue < 1e-10, "imaginary residue {residue}");
    }

    #[test]
    fn real_input_is_conjugate_symmetric() {
        let spec = fft(&random_signal(512, 5));
        assert!(spec.conjugate_symmetry_error() < 1e-9);
    }

    #[test]
    fn hilbert_quadrature() {
        let d = 256;
        for k in [1usize, 5, 64, 127] {
            let h = hilbert(&tone(d, k, 1.0, f64::cos));
            assert!(max_abs_diff(h.samples(), tone(d, k, 1.0, f64::sin).samples()) < 1e-9);
            let h = hilbert(&tone(d, k, 1.0, f64::sin));
            let neg_cos: Vec<f64> = tone(d, k, 1.0, f64::cos).samples().iter().map(|v| -v).collect();
            assert!(max_abs_diff(h.samples(), &neg_cos) < 1e-9);
        }
    }

    #[test]
    fn hilbert_twice_negates_admissible_signal() {
        // remove DC and Nyquist content from a random signal
        let x = random_signal(1024, 9);
        let mut spec = fft(&x);
        let d = spec.len();
        spec.coefficients[0] = Complex::new(0.0, 0.0);
        spec.coefficients[d / 2] = Complex::new(0.0, 0.0);
        let y = ifft(&spec, x.sample_rate_hz()).unwrap();
        let hh = hilbert(&hilbert(&y));
        let neg: Vec<f64> = y.samples().iter().map(|v| -v).collect();
        assert!(max_abs_diff(hh.samples(), &neg) < 1e-8);
    }

    #[test]
    fn envelope_of_tones() {
        let d = 512;
        let p = analytic_parts(&tone(d, 13, 1.0, f64::cos));
        assert!(p.envelope.iter().all(|e| (e - 1.0).abs() < 1e-9));
        let p = analytic_parts(&tone(d, 13, 0.5, f64::cos));
        assert!(p.envelope.iter().all(|e| (e - 0.5).abs() < 1e-9));
    }

    #[test]
    fn am_demodulation() {
        let d = 1024;
        let modulation = |n: usize| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * (4 * n) as f64 / d as f64).cos();
        let s = (0..d)
            .map(|n| modulation(n) * (2.0 * std::f64::consts::PI * (64 * n) as f64 / d as f64).cos())
            .collect();
        let x = TimeSignal::new(s, d as f64).unwrap();
        let p = analytic_parts(&x);
        for (n, e) in p.envelope.iter().enumerate() {
            assert!((e - modulation(n)).abs() < 1e-6);
        }
        let z = envelope_spectrum(&x);
        // envelope 1 + 0.3cos(4·): DC d, bin 4 magnitude 0.3·d/2
        assert!((z.bin(0).re - d as f64).abs() < 1e-6);
        assert!((z.bin(4).norm() - 0.15 * d as f64).abs() < 1e-6);
        assert!(z.bin(3).norm() < 1e-6 && z.bin(5).norm() < 1e-6);
    }

    #[test]
    fn pure_tone_envelope_spectrum_is_dc_only() {
        let z = envelope_spectrum(&tone(256, 17, 1.0, f64::cos));
        assert!((z.values()[0] - 256.0).abs() < 1e-8);
        assert!(z.values()[1..].iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn zero_envelope_phase_is_zero() {
        let x = TimeSignal::new(vec![0.0f64; 16], 16.0).unwrap();
        let p = analytic_parts(&x);
        assert!(p.phase.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn packed_slot_mapping() {
        let d = 16;
        assert_eq!(packed_slots(d, 0), (0, None));
        assert_eq!(packed_slots(d, 1), (1, Some(2)));
        assert_eq!(packed_slots(d, 7), (13, Some(14)));
        assert_eq!(packed_slots(d, 8), (15, None));
        for slot in 0..d {
            let b = slot_bin(d, slot);
            let (re, im) = packed_slots(d, b);
            assert!(re == slot || im == Some(slot));
        }
    }

    #[test]
    fn packed_adjoint_dot_product() {
        let d = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let az = packed_inverse(&z);
        let aty = packed_inverse_adjoint(&y);
        let lhs: f64 = az.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = z.iter().zip(&aty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn f32_path_round_trips() {
        let x: TimeSignal<f32> = random_signal(256, 4).cast();
        let back = ifft(&fft(&x), x.sample_rate_hz()).unwrap();
        let err = x.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        assert!(err < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval(seed in any::<u64>(), log_d in 3u32..11) {
            let x = random_signal(1 << log_d, seed);
            let time: f64 = x.samples().iter().map(|v| v * v).sum();
            let freq: f64 = fft(&x).coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64;
            prop_assert!((time - freq).abs() <= 1e-9 * time);
        }

        #[test]
        fn envelope_dominates_and_reconstructs(seed in any::<u64>(), log_d in 3u32..11) {
            let x = random_signal(1 << log_d, seed);
            let p = analytic_parts(&x);
            for ((e, ph), v) in p.envelope.iter().zip(&p.phase).zip(x.samples()) {
                prop_assert!(*e + 1e-12 >= v.abs());
                prop_assert!((e * ph.cos() - v).abs() < 1e-9);
                prop_assert!(*ph > -std::f64::consts::PI && *ph <= std::f64::consts::PI);
            }
        }

        #[test]
        fn packed_inverse_matches_envelope(seed in any::<u64>(), log_d in 3u32..10) {
            let x = random_signal(1 << log_d, seed);
            let p = analytic_parts(&x);
            let z = envelope_spectrum(&x);
            prop_assert!(max_abs_diff(&z.inverse(), &p.envelope) < 1e-9);
        }
    }
}
