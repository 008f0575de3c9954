use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{he_uniform, relu, Network};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fully-connected network `d → hidden[0] → … → 1` with ReLU activations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnSpec {
    pub input_len: usize,
    pub hidden: Vec<usize>,
}

impl FcnSpec {
    /// Default `d → 128 → 64 → 1`.
    pub fn new(input_len: usize) -> Self {
        Self { input_len, hidden: vec![128, 64] }
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_len);
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fcn<T> {
    input_len: usize,
    layers: Vec<Dense>,
    params: Vec<T>,
}

impl<T: Real> Fcn<T> {
    pub fn init(spec: &FcnSpec, seed: u64) -> Result<Self> {
        let widths = spec.widths();
        if widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut layers = Vec::new();
        let mut offset = 0;
        for pair in widths.windows(2) {
            let (i, o) = (pair[0], pair[1]);
            layers.push(Dense { inputs: i, outputs: o, weight: offset, bias: offset + i * o });
            offset += i * o + o;
        }
        let mut params = vec![T::zero(); offset];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &layers {
            he_uniform(&mut rng, l.inputs, &mut params[l.weight..l.weight + l.inputs * l.outputs]);
        }
        Ok(Self { input_len: spec.input_len, layers, params })
    }

    pub fn zero_output_layer(&mut self) {
        let l = self.layers.last().expect("at least one layer").clone();
        self.params[l.weight..l.bias + l.outputs].fill(T::zero());
    }

    /// Pre-activations of every layer.
    fn forward(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act: Vec<T> = x.to_vec();
        for (li, l) in self.layers.iter().enumerate() {
            let w = &self.params[l.weight..l.weight + l.inputs * l.outputs];
            let b = &self.params[l.bias..l.bias + l.outputs];
            let z: Vec<T> = (0..l.outputs)
                .map(|o| {
                    let row = &w[o * l.inputs..(o + 1) * l.inputs];
                    row.iter().zip(&act).map(|(&a, &v)| a * v).sum::<T>() + b[o]
                })
                .collect();
            if li + 1 < self.layers.len() {
                act = z.iter().map(|&v| relu(v)).collect();
            }
            pre.push(z);
        }
        pre
    }
}

impl<T: Real> Network<T> for Fcn<T> {
    fn params(&self) -> &[T] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    fn logit(&self, x: &[T]) -> T {
        self.forward(x).last().expect("output layer")[0]
    }

    fn backward(
        &self,
        x: &[T],
        dlogit_of: &dyn Fn(T) -> T,
        mut param_grad: Option<&mut [T]>,
        input_grad: bool,
    ) -> (T, Option<Vec<T>>) {
        let pre = self.forward(x);
        let logit = pre.last().expect("output layer")[0];
        let mut delta = vec![dlogit_of(logit)];
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let w = &self.params[l.weight..l.weight + l.inputs * l.outputs];
            if let Some(pg) = param_grad.as_deref_mut() {
                for (o, &dl) in delta.iter().enumerate() {
                    pg[l.bias + o] += dl;
                    if dl == T::zero() {
                        continue;
                    }
                    let row = &mut pg[l.weight + o * l.inputs..l.weight + (o + 1) * l.inputs];
                    if li == 0 {
                        for (g, &v) in row.iter_mut().zip(x) {
                            *g += dl * v;
                        }
                    } else {
                        for (g, &v) in row.iter_mut().zip(&pre[li - 1]) {
                            *g += dl * relu(v);
                        }
                    }
                }
            }
            if li == 0 && !input_grad {
                return (logit, None);
            }
            let mut down = vec![T::zero(); l.inputs];
            for (o, &dl) in delta.iter().enumerate() {
                if dl == T::zero() {
                    continue;
                }
                for (d, &wv) in down.iter_mut().zip(&w[o * l.inputs..(o + 1) * l.inputs]) {
                    *d += wv * dl;
                }
            }
            if li > 0 {
                for (d, &z) in down.iter_mut().zip(&pre[li - 1]) {
                    if z <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            delta = down;
        }
        (logit, Some(delta))
    }
}
