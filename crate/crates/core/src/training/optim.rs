//! Adaptive-moment optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::network::UpdateNetwork;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Divide the gradient by its global L2 norm before the update.
    pub normalize_gradients: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            normalize_gradients: true,
        }
    }
}

/// Raised when a gradient contains NaN or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteGradient;

/// First and second moment estimates, one per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Update flat `params` in place from `grads`.
    pub fn step_flat(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        learning_rate: f64,
    ) -> Result<(), NonFiniteGradient> {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NonFiniteGradient);
        }
        let scale = if self.config.normalize_gradients {
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            1.0 / (norm + 1e-8)
        } else {
            1.0
        };
        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i] * scale;
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }

    /// Network-shaped wrapper around [`AdamState::step_flat`].
    pub fn step<T: Real>(
        &mut self,
        net: &mut UpdateNetwork<T>,
        grads: &UpdateNetwork<T>,
        learning_rate: f64,
    ) -> Result<(), NonFiniteGradient> {
        let mut flat: Vec<f64> = net.params().map(Real::to_f64).collect();
        let g: Vec<f64> = grads.params().map(Real::to_f64).collect();
        self.step_flat(&mut flat, &g, learning_rate)?;
        let mut it = flat.into_iter();
        for t in net.tensors_mut() {
            for p in t.iter_mut() {
                *p = T::from_f64(it.next().expect("lengths checked"));
            }
        }
        Ok(())
    }
}
