use super::{check_model, check_same_len, AttributionVector, Baseline, Method};
use crate::error::{Error, Result};
use crate::models::Differentiable;
use crate::scalar::Real;

pub const MIN_STEPS: usize = 16;

/// Midpoint-rule Integrated Gradients on an arbitrary feature vector:
/// `φ_i = (x_i − x'_i) · (1/m) Σ_k ∂F/∂x_i(x' + (k − ½)/m · (x − x'))`.
pub fn integrated_gradients_values<T: Real, M: Differentiable<T> + ?Sized>(
    model: &M,
    x: &[T],
    baseline: &[T],
    steps: usize,
) -> Result<Vec<T>> {
    if steps < MIN_STEPS {
        return Err(Error::Config(format!("integrated gradients needs at least {MIN_STEPS} steps, got {steps}")));
    }
    check_same_len(x, baseline)?;
    check_model(model, x.len())?;
    let diff: Vec<T> = x.iter().zip(baseline).map(|(&a, &b)| a - b).collect();
    let mut acc = vec![T::zero(); x.len()];
    let mut point = vec![T::zero(); x.len()];
    let m = T::of_usize(steps);
    let half = T::of(0.5);
    for k in 0..steps {
        let alpha = (T::of_usize(k) + half) / m;
        for ((p, &b), &dv) in point.iter_mut().zip(baseline).zip(&diff) {
            *p = b + alpha * dv;
        }
        let g = model.gradient(&point)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite gradient at step {k}")));
        }
        for (a, gv) in acc.iter_mut().zip(g) {
            *a += gv;
        }
    }
    Ok(acc.into_iter().zip(diff).map(|(a, dv)| dv * a / m).collect())
}

pub fn integrated_gradients<T: Real, M: Differentiable<T> + ?Sized>(
    model: &M,
    z: &[T],
    baseline: &[T],
    steps: usize,
) -> Result<AttributionVector<T>> {
    let phi = integrated_gradients_values(model, z, baseline, steps)?;
    let kind = if baseline.iter().all(|v| v.is_zero()) { Baseline::Zero } else { Baseline::Custom };
    AttributionVector::new(Method::IntegratedGradients, kind, None, phi)
}

#[cfg(test)]
mod tests {
    use super::super::test_models::{Constant, GroupPolynomial};
    use super::*;
    use crate::models::{LinearModel, Model};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_for_linear_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = LinearModel::new(w.clone(), 0.5, false);
        for steps in [16, 17, 100] {
            let a = integrated_gradients(&m, &z, &[0.0; 32], steps).unwrap();
            for i in 0..32 {
                assert!((a.packed[i] - w[i] * z[i]).abs() < 1e-14);
            }
            assert_eq!(a.baseline, Baseline::Zero);
        }
    }

    #[test]
    fn zero_when_input_equals_baseline() {
        let m = LinearModel::new(vec![1.0; 8], 0.0, true);
        let z = vec![0.3; 8];
        let a = integrated_gradients(&m, &z, &z, 32).unwrap();
        assert!(a.packed.iter().all(|&v| v == 0.0));
        assert_eq!(a.baseline, Baseline::Custom);
    }

    #[test]
    fn constant_model_gives_zero() {
        let a = integrated_gradients(&Constant(16, 2.0), &[1.0; 16], &[0.0; 16], 16).unwrap();
        assert!(a.packed.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn completeness_converges_for_quadratic() {
        // midpoint rule is exact for integrands linear in α, i.e. quadratic F
        let m = GroupPolynomial {
            groups: vec![vec![0, 1], vec![2, 3]],
            linear: vec![0.5, -1.0],
            quadratic: vec![2.0, 0.7],
            interaction: 1.5,
            d: 4,
        };
        let z = [0.4, -0.2, 1.0, 0.3];
        let a = integrated_gradients(&m, &z, &[0.0; 4], 16).unwrap();
        let gap = m.predict(&z).unwrap() - m.predict(&[0.0; 4]).unwrap();
        assert!((a.total() - gap).abs() < 1e-12);
    }

    #[test]
    fn too_few_steps() {
        let m = LinearModel::new(vec![1.0; 4], 0.0, false);
        assert!(matches!(integrated_gradients(&m, &[0.0; 4], &[0.0; 4], 15), Err(Error::Config(_))));
        assert!(integrated_gradients(&m, &[0.0; 4], &[0.0; 2], 16).is_err());
    }
}
