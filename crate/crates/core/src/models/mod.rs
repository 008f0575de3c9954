//! Differentiable binary classifiers and the envelope-energy baseline.

mod base;
mod cnn;
mod fcn;
pub mod io;
mod metrics;
mod train;

pub use base::{energy_share, BaseClassifier};
pub use cnn::{Cnn, CnnSpec};
pub use fcn::{Fcn, FcnSpec};
pub use metrics::{evaluate, EvalReport};
pub use train::{train, TrainConfig};

use serde::{Deserialize, Serialize};

use crate::error::{size_err, Result};
use crate::scalar::{dot, sigmoid, sigmoid_derivative, Real};

/// Scalar-valued function of a fixed-length input.
pub trait Model<T: Real>: Sync {
    fn input_len(&self) -> usize;

    fn predict(&self, x: &[T]) -> Result<T>;

    fn predict_batch(&self, xs: &[Vec<T>]) -> Result<Vec<T>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// A [`Model`] that exposes its input gradient.
pub trait Differentiable<T: Real>: Model<T> {
    fn value_and_gradient(&self, x: &[T]) -> Result<(T, Vec<T>)>;

    fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.value_and_gradient(x)?.1)
    }
}

impl<T: Real, M: Model<T> + ?Sized> Model<T> for &M {
    fn input_len(&self) -> usize {
        (**self).input_len()
    }
    fn predict(&self, x: &[T]) -> Result<T> {
        (**self).predict(x)
    }
}

impl<T: Real, M: Differentiable<T> + ?Sized> Differentiable<T> for &M {
    fn value_and_gradient(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        (**self).value_and_gradient(x)
    }
}

pub(crate) fn check_input<T>(x: &[T], expected: usize) -> Result<()> {
    if x.len() != expected {
        return size_err(format!("model expects {expected} inputs, got {}", x.len()));
    }
    Ok(())
}

/// `f(x) = w·x + b`, optionally passed through a sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub sigmoid: bool,
}

impl<T: Real> LinearModel<T> {
    pub fn new(weights: Vec<T>, bias: T, sigmoid: bool) -> Self {
        Self { weights, bias, sigmoid }
    }
}

impl<T: Real> Model<T> for LinearModel<T> {
    fn input_len(&self) -> usize {
        self.weights.len()
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        check_input(x, self.weights.len())?;
        let v = dot(&self.weights, x) + self.bias;
        Ok(if self.sigmoid { sigmoid(v) } else { v })
    }
}

impl<T: Real> Differentiable<T> for LinearModel<T> {
    fn value_and_gradient(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        check_input(x, self.weights.len())?;
        let v = dot(&self.weights, x) + self.bias;
        if self.sigmoid {
            let ds = sigmoid_derivative(v);
            Ok((sigmoid(v), self.weights.iter().map(|&w| w * ds).collect()))
        } else {
            Ok((v, self.weights.clone()))
        }
    }
}

/// Network architecture descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Fcn(FcnSpec),
    Cnn(CnnSpec),
}

impl Architecture {
    pub fn input_len(&self) -> usize {
        match self {
            Architecture::Fcn(s) => s.input_len,
            Architecture::Cnn(s) => s.input_len,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Fcn(_) => "fcn",
            Architecture::Cnn(_) => "cnn",
        }
    }
}

/// Flat-parameter network with a logit output.
pub(crate) trait Network<T: Real>: Send + Sync {
    fn params(&self) -> &[T];
    fn params_mut(&mut self) -> &mut [T];
    fn logit(&self, x: &[T]) -> T;
    /// Forward pass followed by back-propagation of `dlogit_of(logit)`.
    /// Parameter gradients are accumulated into `param_grad` when given; the
    /// input gradient is returned only when `input_grad` is set.
    fn backward(
        &self,
        x: &[T],
        dlogit_of: &dyn Fn(T) -> T,
        param_grad: Option<&mut [T]>,
        input_grad: bool,
    ) -> (T, Option<Vec<T>>);
}

#[derive(Debug, Clone, PartialEq)]
enum Net<T> {
    Fcn(Fcn<T>),
    Cnn(Cnn<T>),
}

impl<T: Real> Net<T> {
    fn as_dyn(&self) -> &dyn Network<T> {
        match self {
            Net::Fcn(n) => n,
            Net::Cnn(n) => n,
        }
    }

    fn as_dyn_mut(&mut self) -> &mut dyn Network<T> {
        match self {
            Net::Fcn(n) => n,
            Net::Cnn(n) => n,
        }
    }
}

/// Training provenance recorded alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
}

/// A trained binary classifier; `predict` returns the fault probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    arch: Architecture,
    net: Net<T>,
    pub meta: TrainingMeta,
}

impl<T: Real> TrainedModel<T> {
    /// Freshly initialized (untrained) network.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let net = match arch {
            Architecture::Fcn(s) => Net::Fcn(Fcn::init(s, seed)?),
            Architecture::Cnn(s) => Net::Cnn(Cnn::init(s, seed)?),
        };
        Ok(Self { arch: arch.clone(), net, meta: TrainingMeta { seed, epochs: 0, final_loss: f64::NAN } })
    }

    pub(crate) fn from_params(arch: &Architecture, params: Vec<T>, meta: TrainingMeta) -> Result<Self> {
        let mut m = Self::init(arch, 0)?;
        if params.len() != m.params().len() {
            return size_err(format!(
                "architecture needs {} parameters, got {}",
                m.params().len(),
                params.len()
            ));
        }
        m.params_mut().copy_from_slice(&params);
        m.meta = meta;
        Ok(m)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[T] {
        self.net.as_dyn().params()
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        self.net.as_dyn_mut().params_mut()
    }

    /// Set the weights and bias of the output unit to zero, making the logit
    /// identically 0.
    pub fn zero_output_layer(&mut self) {
        match &mut self.net {
            Net::Fcn(n) => n.zero_output_layer(),
            Net::Cnn(n) => n.zero_output_layer(),
        }
    }

    pub fn logit(&self, x: &[T]) -> Result<T> {
        check_input(x, self.input_len())?;
        Ok(self.net.as_dyn().logit(x))
    }

    pub(crate) fn network(&self) -> &dyn Network<T> {
        self.net.as_dyn()
    }

    pub fn cast<U: Real>(&self) -> TrainedModel<U> {
        let params: Vec<U> = crate::scalar::cast_slice(self.params());
        TrainedModel::from_params(&self.arch, params, self.meta.clone()).expect("same architecture")
    }
}

impl<T: Real> Model<T> for TrainedModel<T> {
    fn input_len(&self) -> usize {
        self.arch.input_len()
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        Ok(sigmoid(self.logit(x)?))
    }
}

impl<T: Real> Differentiable<T> for TrainedModel<T> {
    fn value_and_gradient(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        check_input(x, self.input_len())?;
        let (logit, g) = self.net.as_dyn().backward(x, &sigmoid_derivative, None, true);
        Ok((sigmoid(logit), g.expect("input gradient requested")))
    }
}

pub(crate) fn relu<T: Real>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

pub(crate) fn he_uniform<T: Real, R: rand::Rng>(rng: &mut R, fan_in: usize, out: &mut [T]) {
    let limit = (6.0 / fan_in as f64).sqrt();
    for w in out {
        *w = T::of(rng.gen_range(-limit..limit));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    pub(crate) fn check_fd(model: &dyn Differentiable<f64>, x: &[f64], rng: &mut ChaCha8Rng) {
        let g = model.gradient(x).unwrap();
        let h = 1e-4;
        for _ in 0..20 {
            let i = rng.gen_range(0..x.len());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (model.predict(&xp).unwrap() - model.predict(&xm).unwrap()) / (2.0 * h);
            let scale = fd.abs().max(g[i].abs());
            // ReLU kinks inside the stencil produce O(h) differences; those
            // coordinates are skipped only when the one-sided slopes disagree.
            let fwd = (model.predict(&xp).unwrap() - model.predict(x).unwrap()) / h;
            let bwd = (model.predict(x).unwrap() - model.predict(&xm).unwrap()) / h;
            if (fwd - bwd).abs() > 1e-3 * scale.max(1e-12) {
                continue;
            }
            assert!((fd - g[i]).abs() <= 1e-4 * scale.max(1e-10), "coord {i}: fd {fd} vs grad {}", g[i]);
        }
    }

    #[test]
    fn linear_sigmoid_gradient_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_vec(16, &mut rng);
        let m = LinearModel::new(w.clone(), 0.2, true);
        let x = random_vec(16, &mut rng);
        let v: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + 0.2;
        let s = 1.0 / (1.0 + (-v).exp());
        let g = m.gradient(&x).unwrap();
        for (gi, wi) in g.iter().zip(&w) {
            assert!((gi - s * (1.0 - s) * wi).abs() < 1e-15);
        }
    }

    #[test]
    fn saturated_sigmoid_keeps_a_gradient() {
        // σ(40) rounds to 1.0, yet σ'(40) = e^-40 / (1 + e^-40)^2
        let m = LinearModel::new(vec![1.0, 2.0], 0.0, true);
        let (p, g) = m.value_and_gradient(&[40.0, 0.0]).unwrap();
        assert_eq!(p, 1.0);
        let want = (-40.0f64).exp();
        assert!((g[0] - want).abs() < 1e-12 * want && (g[1] - 2.0 * want).abs() < 1e-12 * want, "{g:?}");
    }

    #[test]
    fn zero_output_layer_is_half_and_flat() {
        for arch in [Architecture::Fcn(FcnSpec::new(64)), Architecture::Cnn(CnnSpec::new(512))] {
            let mut m = TrainedModel::<f64>::init(&arch, 3).unwrap();
            m.zero_output_layer();
            let zeros = vec![0.0; arch.input_len()];
            assert_eq!(m.predict(&zeros).unwrap(), 0.5);
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let x = random_vec(arch.input_len(), &mut rng);
            assert!(m.gradient(&x).unwrap().iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn batch_matches_single() {
        let arch = Architecture::Cnn(CnnSpec::new(512));
        let m = TrainedModel::<f64>::init(&arch, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<Vec<f64>> = (0..5).map(|_| random_vec(512, &mut rng)).collect();
        let batch = m.predict_batch(&xs).unwrap();
        for (x, b) in xs.iter().zip(batch) {
            assert_eq!(m.predict(x).unwrap(), b);
        }
    }

    #[test]
    fn length_mismatch_errors() {
        let m = TrainedModel::<f64>::init(&Architecture::Fcn(FcnSpec::new(32)), 0).unwrap();
        assert!(m.predict(&[0.0; 16]).is_err());
        assert!(m.gradient(&[0.0; 64]).is_err());
    }

    #[test]
    fn untrained_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for arch in [Architecture::Fcn(FcnSpec::new(128)), Architecture::Cnn(CnnSpec::new(512))] {
            let m = TrainedModel::<f64>::init(&arch, 8).unwrap();
            for _ in 0..5 {
                let x = random_vec(arch.input_len(), &mut rng);
                check_fd(&m, &x, &mut rng);
            }
        }
    }

    #[test]
    fn cast_preserves_predictions_roughly() {
        let arch = Architecture::Fcn(FcnSpec::new(64));
        let m = TrainedModel::<f64>::init(&arch, 9).unwrap();
        let m32: TrainedModel<f32> = m.cast();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_vec(64, &mut rng);
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        assert!((m.predict(&x).unwrap() - m32.predict(&x32).unwrap() as f64).abs() < 1e-5);
    }
}
