//! The learned per-cell rule: a two-layer perceptron from the raw 3x3
//! neighborhood (144 values) to a 16-channel residual update.

use crate::error::{Error, Result};
use crate::grid::{CHANNELS, PERCEPTION};
use crate::real::Real;
use crate::rng::RngStream;

pub const DEFAULT_HIDDEN: usize = 128;

/// Weights of the update rule.
///
/// Layout matches the checkpoint order: `w1` is `hidden x 144` row-major,
/// then `b1`, `w2` (`16 x hidden` row-major), `b2`. The same struct doubles as
/// the gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateNetwork<T = f32> {
    hidden: usize,
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Real> UpdateNetwork<T> {
    pub fn zeros(hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::invalid("hidden size must be at least 1"));
        }
        Ok(Self {
            hidden,
            w1: vec![T::zero(); hidden * PERCEPTION],
            b1: vec![T::zero(); hidden],
            w2: vec![T::zero(); CHANNELS * hidden],
            b2: vec![T::zero(); CHANNELS],
        })
    }

    /// Identity rule at start: the output layer is zero, the first layer is
    /// uniform in `±1/sqrt(144)`.
    pub fn init(hidden: usize, rng: &mut RngStream) -> Result<Self> {
        let mut net = Self::zeros(hidden)?;
        let scale = 1.0 / (PERCEPTION as f64).sqrt();
        for w in &mut net.w1 {
            *w = T::from_f64(rng.uniform_range(-scale, scale));
        }
        Ok(net)
    }

    pub fn from_parts(hidden: usize, w1: Vec<T>, b1: Vec<T>, w2: Vec<T>, b2: Vec<T>) -> Result<Self> {
        let net = Self {
            hidden,
            w1,
            b1,
            w2,
            b2,
        };
        if hidden == 0
            || net.w1.len() != hidden * PERCEPTION
            || net.b1.len() != hidden
            || net.w2.len() != CHANNELS * hidden
            || net.b2.len() != CHANNELS
        {
            return Err(Error::Dimension(format!(
                "parameter shapes do not match hidden size {hidden}"
            )));
        }
        Ok(net)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden).expect("hidden >= 1")
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        Self::param_count_for(self.hidden)
    }

    pub fn param_count_for(hidden: usize) -> usize {
        hidden * PERCEPTION + hidden + CHANNELS * hidden + CHANNELS
    }

    /// Parameter tensors in checkpoint order.
    pub fn tensors(&self) -> [&[T]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<T>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn params(&self) -> impl Iterator<Item = T> + '_ {
        self.tensors().into_iter().flat_map(|t| t.iter().copied())
    }

    pub fn param(&self, i: usize) -> T {
        let mut i = i;
        for t in self.tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param_mut(&mut self, i: usize) -> &mut T {
        let mut i = i;
        for t in self.tensors_mut() {
            if i < t.len() {
                return &mut t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn cast<U: Real>(&self) -> UpdateNetwork<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::from_f64(x.to_f64())).collect();
        UpdateNetwork {
            hidden: self.hidden,
            w1: conv(&self.w1),
            b1: conv(&self.b1),
            w2: conv(&self.w2),
            b2: conv(&self.b2),
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.params()
            .map(|p| p.to_f64() * p.to_f64())
            .sum::<f64>()
            .sqrt()
    }

    /// Residual update for one neighborhood: `w2 · relu(w1 · x + b1) + b2`.
    pub fn forward_cell(&self, nbhd: &[T]) -> Result<[T; CHANNELS]> {
        if nbhd.len() != PERCEPTION {
            return Err(Error::invalid(format!(
                "neighborhood must have {PERCEPTION} values, got {}",
                nbhd.len()
            )));
        }
        if nbhd.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite neighborhood value"));
        }
        let mut hidden = vec![T::zero(); self.hidden];
        let mut out = [T::zero(); CHANNELS];
        self.forward_batch(nbhd, 1, &mut hidden, &mut out);
        Ok(out)
    }

    /// Batched forward over `n` neighborhoods stored row-major in `inputs`
    /// (`n x 144`). Writes post-relu activations to `hidden` (`n x hidden`)
    /// and the residual to `out` (`n x 16`).
    pub fn forward_batch(&self, inputs: &[T], n: usize, hidden: &mut [T], out: &mut [T]) {
        let h = self.hidden;
        for row in hidden[..n * h].chunks_exact_mut(h) {
            row.copy_from_slice(&self.b1);
        }
        // hidden = inputs · w1ᵀ + b1
        T::gemm(
            n,
            PERCEPTION,
            h,
            T::one(),
            inputs,
            (PERCEPTION as isize, 1),
            &self.w1,
            (1, PERCEPTION as isize),
            T::one(),
            hidden,
            (h as isize, 1),
        );
        for v in hidden[..n * h].iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        for row in out[..n * CHANNELS].chunks_exact_mut(CHANNELS) {
            row.copy_from_slice(&self.b2);
        }
        // out = hidden · w2ᵀ + b2
        T::gemm(
            n,
            h,
            CHANNELS,
            T::one(),
            hidden,
            (h as isize, 1),
            &self.w2,
            (1, h as isize),
            T::one(),
            out,
            (CHANNELS as isize, 1),
        );
    }
}
