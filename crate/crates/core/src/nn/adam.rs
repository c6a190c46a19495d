//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators, one buffer per parameter tensor.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub t: u64,
    cursor: usize,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a new optimizer step; follow with one [`AdamState::update`] per parameter, in a fixed order.
    pub fn begin_step(&mut self) {
        self.t += 1;
        self.cursor = 0;
    }

    pub fn update(&mut self, param: &mut Tensor, grad: &Tensor, cfg: &AdamConfig) -> Result<()> {
        if param.shape() != grad.shape() {
            return Err(Error::Shape(format!(
                "parameter {:?} vs gradient {:?}",
                param.shape(),
                grad.shape()
            )));
        }
        let i = self.cursor;
        self.cursor += 1;
        if i == self.first.len() && self.t == 1 {
            self.first.push(vec![0.0; param.len()]);
            self.second.push(vec![0.0; param.len()]);
        }
        if i >= self.first.len() || self.first[i].len() != param.len() {
            return Err(Error::Shape("optimizer state belongs to a different model".into()));
        }
        let t = self.t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let m = &mut self.first[i];
        let v = &mut self.second[i];
        for (((w, &g), mk), vk) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mk = cfg.beta1 * *mk + (1.0 - cfg.beta1) * g;
            *vk = cfg.beta2 * *vk + (1.0 - cfg.beta2) * g * g;
            let m_hat = *mk / c1;
            let v_hat = *vk / c2;
            *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        Ok(())
    }
}

/// One update of every parameter from its gradient.
pub fn adam_step(
    params: &mut [&mut Tensor],
    grads: &[&Tensor],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    state.begin_step();
    for (p, g) in params.iter_mut().zip(grads) {
        state.update(p, g, cfg)?;
    }
    Ok(())
}
