use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::error::{Error, Result};

/// Adam hyperparameters and moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Parameters,
    v: Parameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            weight_decay: 1e-6,
        }
    }
}

impl OptimizerState {
    pub fn new(params: &Parameters, cfg: AdamConfig) -> Self {
        Self {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// One bias-corrected Adam update with L2 weight decay folded into the
    /// gradient.
    pub fn step(&mut self, params: &mut Parameters, grads: &Parameters) -> Result<()> {
        if !params.same_layout(grads) || !params.same_layout(&self.m) {
            return Err(Error::Shape("gradient layout does not match parameters".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = &grads.tensor(i).data;
            let m = &mut self.m.tensor_mut(i).data;
            let v = &mut self.v.tensor_mut(i).data;
            let theta = &mut params.tensor_mut(i).data;
            for j in 0..theta.len() {
                let gj = g[j] + self.weight_decay * theta[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                theta[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Functional form: returns updated parameters, mutating `state`.
pub fn adam_step(params: &Parameters, grads: &Parameters, state: &mut OptimizerState) -> Result<Parameters> {
    let mut next = params.clone();
    state.step(&mut next, grads)?;
    Ok(next)
}
