use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{he_uniform, relu, Network};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stack of `(conv1d, ReLU, max-pool)` blocks, global average pooling and a
/// single dense output unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub input_len: usize,
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub pool: usize,
}

impl CnnSpec {
    /// Default: 3 blocks with 8/16/32 channels, kernel 16, stride 2, pool 2.
    pub fn new(input_len: usize) -> Self {
        Self { input_len, channels: vec![8, 16, 32], kernel: 16, stride: 2, pool: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    in_ch: usize,
    out_ch: usize,
    in_len: usize,
    conv_len: usize,
    pool_len: usize,
    weight: usize,
    bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cnn<T> {
    input_len: usize,
    kernel: usize,
    stride: usize,
    pool: usize,
    blocks: Vec<Block>,
    dense_weight: usize,
    dense_bias: usize,
    params: Vec<T>,
}

struct BlockCache<T> {
    /// ReLU(conv) activations, `out_ch × conv_len`.
    act: Vec<T>,
    /// Pooled output, `out_ch × pool_len`.
    pooled: Vec<T>,
    /// Index into `act` of each pooled maximum.
    argmax: Vec<usize>,
}

impl<T: Real> Cnn<T> {
    pub fn init(spec: &CnnSpec, seed: u64) -> Result<Self> {
        if spec.channels.is_empty() || spec.kernel == 0 || spec.stride == 0 || spec.pool == 0 {
            return Err(Error::Config("CNN needs at least one block and positive kernel/stride/pool".into()));
        }
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut in_ch = 1;
        let mut len = spec.input_len;
        for &out_ch in &spec.channels {
            if len < spec.kernel {
                return Err(Error::Config(format!("input of length {} too short for the CNN", spec.input_len)));
            }
            let conv_len = (len - spec.kernel) / spec.stride + 1;
            let pool_len = conv_len / spec.pool;
            if pool_len == 0 || out_ch == 0 {
                return Err(Error::Config(format!("input of length {} too short for the CNN", spec.input_len)));
            }
            let w = out_ch * in_ch * spec.kernel;
            blocks.push(Block { in_ch, out_ch, in_len: len, conv_len, pool_len, weight: offset, bias: offset + w });
            offset += w + out_ch;
            in_ch = out_ch;
            len = pool_len;
        }
        let dense_weight = offset;
        let dense_bias = offset + in_ch;
        let mut params = vec![T::zero(); dense_bias + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for b in &blocks {
            he_uniform(&mut rng, b.in_ch * spec.kernel, &mut params[b.weight..b.bias]);
        }
        he_uniform(&mut rng, in_ch, &mut params[dense_weight..dense_bias]);
        Ok(Self {
            input_len: spec.input_len,
            kernel: spec.kernel,
            stride: spec.stride,
            pool: spec.pool,
            blocks,
            dense_weight,
            dense_bias,
            params,
        })
    }

    pub fn zero_output_layer(&mut self) {
        self.params[self.dense_weight..].fill(T::zero());
    }

    fn block_forward(&self, b: &Block, input: &[T]) -> BlockCache<T> {
        let k = self.kernel;
        let w = &self.params[b.weight..b.bias];
        let bias = &self.params[b.bias..b.bias + b.out_ch];
        let phases: Vec<Vec<Vec<T>>> =
            (0..b.in_ch).map(|i| polyphase(&input[i * b.in_len..(i + 1) * b.in_len], self.stride)).collect();
        let mut act = vec![T::zero(); b.out_ch * b.conv_len];
        for o in 0..b.out_ch {
            let y = &mut act[o * b.conv_len..(o + 1) * b.conv_len];
            y.fill(bias[o]);
            for (i, ph) in phases.iter().enumerate() {
                let wk = &w[(o * b.in_ch + i) * k..(o * b.in_ch + i + 1) * k];
                for (j, &wv) in wk.iter().enumerate() {
                    let (q, r) = (j / self.stride, j % self.stride);
                    axpy(wv, &ph[r][q..q + b.conv_len], y);
                }
            }
            for yv in y.iter_mut() {
                *yv = relu(*yv);
            }
        }
        let mut pooled = vec![T::zero(); b.out_ch * b.pool_len];
        let mut argmax = vec![0; b.out_ch * b.pool_len];
        for o in 0..b.out_ch {
            for t in 0..b.pool_len {
                let start = o * b.conv_len + t * self.pool;
                let mut best = start;
                for idx in start + 1..start + self.pool {
                    if act[idx] > act[best] {
                        best = idx;
                    }
                }
                pooled[o * b.pool_len + t] = act[best];
                argmax[o * b.pool_len + t] = best;
            }
        }
        BlockCache { act, pooled, argmax }
    }

    fn forward(&self, x: &[T]) -> (Vec<BlockCache<T>>, Vec<T>, T) {
        let mut caches: Vec<BlockCache<T>> = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let input = caches.last().map_or(x, |c| &c.pooled[..]);
            let cache = self.block_forward(b, input);
            caches.push(cache);
        }
        let last = self.blocks.last().expect("at least one block");
        let pooled = &caches.last().expect("at least one block").pooled;
        let inv = T::one() / T::of_usize(last.pool_len);
        let gap: Vec<T> = (0..last.out_ch)
            .map(|o| pooled[o * last.pool_len..(o + 1) * last.pool_len].iter().copied().sum::<T>() * inv)
            .collect();
        let dense = &self.params[self.dense_weight..self.dense_bias];
        let logit = gap.iter().zip(dense).map(|(&g, &w)| g * w).sum::<T>() + self.params[self.dense_bias];
        (caches, gap, logit)
    }
}

impl<T: Real> Network<T> for Cnn<T> {
    fn params(&self) -> &[T] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    fn logit(&self, x: &[T]) -> T {
        self.forward(x).2
    }

    fn backward(
        &self,
        x: &[T],
        dlogit_of: &dyn Fn(T) -> T,
        mut param_grad: Option<&mut [T]>,
        input_grad: bool,
    ) -> (T, Option<Vec<T>>) {
        let (caches, gap, logit) = self.forward(x);
        let dl = dlogit_of(logit);
        let (k, s) = (self.kernel, self.stride);
        let last = self.blocks.last().expect("at least one block");

        if let Some(pg) = param_grad.as_deref_mut() {
            for (o, &g) in gap.iter().enumerate() {
                pg[self.dense_weight + o] += dl * g;
            }
            pg[self.dense_bias] += dl;
        }

        // gradient w.r.t. the pooled output of the last block
        let inv = T::one() / T::of_usize(last.pool_len);
        let mut d_pooled = vec![T::zero(); last.out_ch * last.pool_len];
        for o in 0..last.out_ch {
            let v = dl * self.params[self.dense_weight + o] * inv;
            d_pooled[o * last.pool_len..(o + 1) * last.pool_len].fill(v);
        }

        for bi in (0..self.blocks.len()).rev() {
            let b = &self.blocks[bi];
            let cache = &caches[bi];
            // max-pool and ReLU
            let mut d_act = vec![T::zero(); b.out_ch * b.conv_len];
            for (idx, &g) in cache.argmax.iter().zip(&d_pooled) {
                if cache.act[*idx] > T::zero() {
                    d_act[*idx] += g;
                }
            }
            let input = if bi == 0 { x } else { &caches[bi - 1].pooled[..] };
            let w = &self.params[b.weight..b.bias];

            if let Some(pg) = param_grad.as_deref_mut() {
                let phases: Vec<Vec<Vec<T>>> =
                    (0..b.in_ch).map(|i| polyphase(&input[i * b.in_len..(i + 1) * b.in_len], s)).collect();
                for o in 0..b.out_ch {
                    let dy = &d_act[o * b.conv_len..(o + 1) * b.conv_len];
                    pg[b.bias + o] += dy.iter().copied().sum::<T>();
                    for (i, ph) in phases.iter().enumerate() {
                        let base = b.weight + (o * b.in_ch + i) * k;
                        for j in 0..k {
                            pg[base + j] += dot4(dy, &ph[j % s][j / s..j / s + b.conv_len]);
                        }
                    }
                }
            }

            if bi == 0 && !input_grad {
                return (logit, None);
            }
            let mut d_input = vec![T::zero(); b.in_ch * b.in_len];
            for i in 0..b.in_ch {
                let mut d_ph: Vec<Vec<T>> = (0..s).map(|r| vec![T::zero(); phase_len(b.in_len, s, r)]).collect();
                for o in 0..b.out_ch {
                    let dy = &d_act[o * b.conv_len..(o + 1) * b.conv_len];
                    let wk = &w[(o * b.in_ch + i) * k..(o * b.in_ch + i + 1) * k];
                    for (j, &wv) in wk.iter().enumerate() {
                        let q = j / s;
                        axpy(wv, dy, &mut d_ph[j % s][q..q + b.conv_len]);
                    }
                }
                let dxi = &mut d_input[i * b.in_len..(i + 1) * b.in_len];
                for (r, ph) in d_ph.iter().enumerate() {
                    for (m, &g) in ph.iter().enumerate() {
                        dxi[m * s + r] = g;
                    }
                }
            }
            if bi == 0 {
                return (logit, Some(d_input));
            }
            // d_input is the gradient w.r.t. the previous block's pooled output
            d_pooled = d_input;
        }
        unreachable!("loop returns at block 0")
    }
}

fn phase_len(len: usize, stride: usize, r: usize) -> usize {
    (len + stride - 1 - r) / stride
}

/// Split `x` into `stride` interleaved phases: phase `r` holds `x[r], x[r+s], ...`.
fn polyphase<T: Real>(x: &[T], stride: usize) -> Vec<Vec<T>> {
    (0..stride).map(|r| x.iter().skip(r).step_by(stride).copied().collect()).collect()
}

#[inline]
fn axpy<T: Real>(a: T, x: &[T], y: &mut [T]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

/// Dot product with four independent accumulators.
#[inline]
fn dot4<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}
