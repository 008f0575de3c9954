use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_model, check_same_len, AttributionVector, Baseline, FeatureGroups, Method};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::scalar::Real;

pub const MIN_PERMUTATIONS: usize = 8;

/// Largest group count for which exhaustive coalition enumeration is used.
pub const MAX_EXACT_GROUPS: usize = 12;

/// Input with groups in `present` taken from `x` and the rest from `baseline`.
fn compose<T: Real>(x: &[T], baseline: &[T], groups: &FeatureGroups, present: impl Fn(usize) -> bool) -> Vec<T> {
    let mut v = baseline.to_vec();
    for (g, members) in groups.iter().enumerate() {
        if present(g) {
            for &i in members {
                v[i] = x[i];
            }
        }
    }
    v
}

fn check_inputs<T: Real, M: Model<T> + ?Sized>(model: &M, x: &[T], baseline: &[T], groups: &FeatureGroups) -> Result<()> {
    check_same_len(x, baseline)?;
    groups.check(x.len())?;
    check_model(model, x.len())
}

/// Exact group Shapley values from all `2^G` coalitions.
pub fn shapley_exact_values<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    x: &[T],
    baseline: &[T],
    groups: &FeatureGroups,
) -> Result<Vec<T>> {
    check_inputs(model, x, baseline, groups)?;
    let g = groups.len();
    if g > MAX_EXACT_GROUPS {
        return Err(Error::Config(format!("exact Shapley supports at most {MAX_EXACT_GROUPS} groups, got {g}")));
    }
    let values = (0..1usize << g)
        .map(|mask| model.predict(&compose(x, baseline, groups, |j| mask >> j & 1 == 1)))
        .collect::<Result<Vec<T>>>()?;
    // weight(s) = s!(G-s-1)!/G!
    let mut fact = vec![1.0f64; g + 1];
    for i in 1..=g {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<T> = (0..g).map(|s| T::of(fact[s] * fact[g - s - 1] / fact[g])).collect();
    let mut phi = vec![T::zero(); g];
    for mask in 0..1usize << g {
        let size = mask.count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                *p += weight[size] * (values[mask | 1 << j] - values[mask]);
            }
        }
    }
    Ok(phi)
}

/// Permutation-sampling estimate of group Shapley values. Each permutation
/// contributes marginal gains that telescope to `F(x) − F(baseline)`.
pub fn shapley_sampling_values<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    x: &[T],
    baseline: &[T],
    groups: &FeatureGroups,
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(Error::Config(format!(
            "Shapley sampling needs at least {MIN_PERMUTATIONS} permutations, got {n_permutations}"
        )));
    }
    check_inputs(model, x, baseline, groups)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..groups.len()).collect();
    let start = model.predict(baseline)?;
    let mut phi = vec![T::zero(); groups.len()];
    let mut point = baseline.to_vec();
    for _ in 0..n_permutations {
        order.shuffle(&mut rng);
        point.copy_from_slice(baseline);
        let mut prev = start;
        for &j in &order {
            for &i in groups.members(j) {
                point[i] = x[i];
            }
            let v = model.predict(&point)?;
            phi[j] += v - prev;
            prev = v;
        }
    }
    let n = T::of_usize(n_permutations);
    Ok(phi.into_iter().map(|p| p / n).collect())
}

/// Group Shapley attribution spread uniformly over member coefficients.
///
/// `exact` selects full enumeration when the group count allows it; larger
/// partitions fall back to permutation sampling.
pub fn shapley_sampling<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    z: &[T],
    baseline: &[T],
    groups: &FeatureGroups,
    n_permutations: usize,
    exact: bool,
    seed: u64,
) -> Result<AttributionVector<T>> {
    let per_group = if exact && groups.len() <= MAX_EXACT_GROUPS {
        shapley_exact_values(model, z, baseline, groups)?
    } else {
        if exact {
            log::warn!(
                "{} groups exceed the exact Shapley limit of {MAX_EXACT_GROUPS}; using {n_permutations} sampled permutations",
                groups.len()
            );
        }
        shapley_sampling_values(model, z, baseline, groups, n_permutations, seed)?
    };
    let kind = if baseline.iter().all(|v| v.is_zero()) { Baseline::Zero } else { Baseline::Custom };
    AttributionVector::new(Method::Shapley, kind, Some(seed), groups.spread(&per_group))
}
