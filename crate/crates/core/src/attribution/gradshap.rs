use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_model, check_same_len, AttributionVector, Baseline, Method};
use crate::error::{Error, Result};
use crate::models::Differentiable;
use crate::scalar::Real;

pub const MIN_SAMPLES: usize = 16;

/// Expected-gradients estimate: mean over draws `(x' ~ background,
/// α ~ U(0,1))` of `(x − x') ⊙ ∇F(x' + α(x − x'))`.
pub fn grad_shap_values<T: Real, M: Differentiable<T> + ?Sized>(
    model: &M,
    x: &[T],
    background: &[&[T]],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if background.is_empty() {
        return Err(Error::Config("GradSHAP needs a nonempty background".into()));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::Config(format!("GradSHAP needs at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    for b in background {
        check_same_len(x, b)?;
    }
    check_model(model, x.len())?;

    // draws are fixed up front so the estimate depends only on `seed`
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(usize, f64)> =
        (0..n_samples).map(|_| (rng.gen_range(0..background.len()), rng.gen::<f64>())).collect();

    let mut acc = vec![T::zero(); x.len()];
    let mut point = vec![T::zero(); x.len()];
    for (s, &(bi, alpha)) in draws.iter().enumerate() {
        let base = background[bi];
        let alpha = T::of(alpha);
        for ((p, &b), &xv) in point.iter_mut().zip(base).zip(x) {
            *p = b + alpha * (xv - b);
        }
        let g = model.gradient(&point)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite gradient at sample {s}")));
        }
        for (((a, gv), &xv), &b) in acc.iter_mut().zip(g).zip(x).zip(base) {
            *a += (xv - b) * gv;
        }
    }
    let n = T::of_usize(n_samples);
    Ok(acc.into_iter().map(|a| a / n).collect())
}

pub fn grad_shap<T: Real, M: Differentiable<T> + ?Sized>(
    model: &M,
    z: &[T],
    background: &[&[T]],
    n_samples: usize,
    seed: u64,
) -> Result<AttributionVector<T>> {
    let phi = grad_shap_values(model, z, background, n_samples, seed)?;
    AttributionVector::new(Method::GradShap, Baseline::Background { n: background.len() }, Some(seed), phi)
}
