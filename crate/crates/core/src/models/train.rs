use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, Architecture, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Real};

/// Mini-batch SGD with heavy-ball momentum on binary cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 50, learning_rate: 1e-3, momentum: 0.9, batch_size: 32 }
    }
}

/// Numerically stable `BCE(σ(logit), y)`.
fn bce_with_logit<T: Real>(logit: T, positive: bool) -> T {
    let y = if positive { T::one() } else { T::zero() };
    logit.max(T::zero()) - logit * y + (T::one() + (-logit.abs()).exp()).ln()
}

/// Train `arch` on `(inputs, labels)`, `true` meaning fault.
///
/// Returns the model and the mean training loss of every epoch.
pub fn train<T: Real>(
    arch: &Architecture,
    inputs: &[Vec<T>],
    labels: &[bool],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel<T>, Vec<f64>)> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::Config(format!(
            "need a nonempty dataset with one label per input ({} inputs, {} labels)",
            inputs.len(),
            labels.len()
        )));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::Config("training data must contain both classes".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::Config("epochs and batch_size must be positive".into()));
    }
    for x in inputs {
        check_input(x, arch.input_len())?;
    }

    let mut model = TrainedModel::<T>::init(arch, seed)?;
    let n_params = model.params().len();
    let mut velocity = vec![T::zero(); n_params];
    let mut grad = vec![T::zero(); n_params];
    let lr = T::of(cfg.learning_rate);
    let mu = T::of(cfg.momentum);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(T::zero());
            let scale = T::one() / T::of_usize(batch.len());
            for &i in batch {
                let y = if labels[i] { T::one() } else { T::zero() };
                let dlogit = |l: T| (sigmoid(l) - y) * scale;
                let (logit, _) = model.network().backward(&inputs[i], &dlogit, Some(&mut grad), false);
                epoch_loss += bce_with_logit(logit, labels[i]).as_f64();
            }
            let params = model.params_mut();
            for ((p, v), &g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = mu * *v + g;
                *p -= lr * *v;
            }
        }
        let mean = epoch_loss / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        log::debug!("epoch {epoch}: loss {mean:.6}");
        history.push(mean);
    }

    model.meta = TrainingMeta { seed, epochs: cfg.epochs, final_loss: *history.last().expect("epochs > 0") };
    Ok((model, history))
}
