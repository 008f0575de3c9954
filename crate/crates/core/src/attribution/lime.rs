use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_model, AttributionVector, Baseline, FeatureGroups, Method};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::scalar::Real;

/// Surrogate-fit settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeParams {
    /// Perturbations drawn; at least ten per group.
    pub n_samples: usize,
    /// Width of the exponential kernel on normalized Hamming distance.
    pub kernel_width: f64,
    /// Ridge penalty on the group coefficients (the intercept is free).
    pub ridge_lambda: f64,
}

impl LimeParams {
    pub fn default_kernel_width() -> f64 {
        0.75
    }

    pub fn default_ridge() -> f64 {
        1.0
    }

    pub fn new(n_samples: usize) -> Self {
        Self { n_samples, kernel_width: Self::default_kernel_width(), ridge_lambda: Self::default_ridge() }
    }
}

/// In-place Cholesky solve of `a·x = b` for symmetric positive definite `a`
/// (row-major `n × n`).
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if !(s > 1e-12 * (1.0 + a[j * n + j].abs())) {
            return Err(Error::Singular(s));
        }
        let l = s.sqrt();
        a[j * n + j] = l;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

/// Per-group coefficients of a weighted ridge surrogate fitted to the model
/// on random group maskings of `z` (dropped groups set to zero).
pub fn lime_coefficients<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    z: &[T],
    groups: &FeatureGroups,
    params: &LimeParams,
    seed: u64,
) -> Result<Vec<f64>> {
    groups.check(z.len())?;
    check_model(model, z.len())?;
    let g = groups.len();
    if params.n_samples < 10 * g {
        return Err(Error::Config(format!("LIME needs at least {} samples for {g} groups, got {}", 10 * g, params.n_samples)));
    }
    if !(params.kernel_width > 0.0) || !(params.ridge_lambda >= 0.0) {
        return Err(Error::Config("LIME kernel width must be positive and ridge penalty nonnegative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks: Vec<Vec<bool>> = (0..params.n_samples)
        .map(|s| (0..g).map(|_| s == 0 || rng.gen_bool(0.5)).collect())
        .collect();
    let inputs: Vec<Vec<T>> = masks
        .iter()
        .map(|m| {
            let mut v = vec![T::zero(); z.len()];
            for (j, members) in groups.iter().enumerate() {
                if m[j] {
                    for &i in members {
                        v[i] = z[i];
                    }
                }
            }
            v
        })
        .collect();
    let y: Vec<f64> = model.predict_batch(&inputs)?.into_iter().map(Real::as_f64).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("model output is not finite on a LIME perturbation".into()));
    }
    let w: Vec<f64> = masks
        .iter()
        .map(|m| {
            let dist = m.iter().filter(|&&k| !k).count() as f64 / g as f64;
            (-(dist * dist) / (params.kernel_width * params.kernel_width)).exp()
        })
        .collect();

    // center on weighted means so the intercept drops out of the penalty
    let wsum: f64 = w.iter().sum();
    let ybar = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let mut xbar = vec![0.0; g];
    for (m, &wi) in masks.iter().zip(&w) {
        for (xb, &k) in xbar.iter_mut().zip(m) {
            if k {
                *xb += wi;
            }
        }
    }
    xbar.iter_mut().for_each(|v| *v /= wsum);

    let mut gram = vec![0.0; g * g];
    let mut rhs = vec![0.0; g];
    let mut row = vec![0.0; g];
    for ((m, &wi), &yi) in masks.iter().zip(&w).zip(&y) {
        for j in 0..g {
            row[j] = f64::from(u8::from(m[j])) - xbar[j];
        }
        let yc = yi - ybar;
        for a in 0..g {
            let ra = wi * row[a];
            rhs[a] += ra * yc;
            for b in 0..=a {
                gram[a * g + b] += ra * row[b];
            }
        }
    }
    for a in 0..g {
        for b in 0..a {
            gram[b * g + a] = gram[a * g + b];
        }
        gram[a * g + a] += params.ridge_lambda;
    }
    cholesky_solve(&mut gram, &mut rhs, g)?;
    Ok(rhs)
}

pub fn lime<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    z: &[T],
    groups: &FeatureGroups,
    params: &LimeParams,
    seed: u64,
) -> Result<AttributionVector<T>> {
    let beta: Vec<T> = lime_coefficients(model, z, groups, params, seed)?.into_iter().map(T::of).collect();
    AttributionVector::new(Method::Lime, Baseline::Zero, Some(seed), groups.spread(&beta))
}
