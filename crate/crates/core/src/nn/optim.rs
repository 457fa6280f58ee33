use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

/// Adam with decoupled weight decay. Moments are shaped like the model.
#[derive(Debug, Clone)]
pub struct AdamW {
    config: AdamWConfig,
    step: u64,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl AdamW {
    pub fn new(model: &Mlp, config: AdamWConfig) -> Self {
        let zw: Vec<_> = model
            .weights
            .iter()
            .map(|w| Array2::zeros(w.raw_dim()))
            .collect();
        let zb: Vec<_> = model
            .biases
            .iter()
            .map(|b| Array1::zeros(b.raw_dim()))
            .collect();
        Self {
            config,
            step: 0,
            m_w: zw.clone(),
            v_w: zw,
            m_b: zb.clone(),
            v_b: zb,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    /// One update at learning rate `lr`:
    /// `p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, model: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.weights.len() != model.weights.len() {
            return Err(invalid("gradient set does not match model depth"));
        }
        for (l, (gw, gb)) in grads.weights.iter().zip(&grads.biases).enumerate() {
            if gw.raw_dim() != model.weights[l].raw_dim() || gb.len() != model.biases[l].len() {
                return Err(invalid(format!("gradient shape mismatch in layer {l}")));
            }
            if !gw.iter().chain(gb.iter()).all(|g| g.is_finite()) {
                return Err(Error::NonFiniteGradient { layer: l });
            }
        }

        self.step += 1;
        let AdamWConfig {
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let decay = 1.0 - lr * weight_decay;
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: &f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p * decay - lr * m_hat / (v_hat.sqrt() + epsilon);
        };
        for l in 0..model.weights.len() {
            Zip::from(&mut model.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&grads.weights[l])
                .for_each(update);
            Zip::from(&mut model.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&grads.biases[l])
                .for_each(update);
        }
        Ok(())
    }
}

/// Cosine annealing from `lr_max` at `epoch = 0` down to `lr_min` at
/// `epoch = total`.
pub fn cosine_lr(epoch: usize, total: usize, lr_max: f64, lr_min: f64) -> Result<f64> {
    if total == 0 {
        return Err(invalid("cosine schedule needs total >= 1"));
    }
    if epoch > total {
        return Err(invalid(format!(
            "epoch {epoch} beyond schedule length {total}"
        )));
    }
    let phase = std::f64::consts::PI * epoch as f64 / total as f64;
    Ok(lr_min + 0.5 * (lr_max - lr_min) * (1.0 + phase.cos()))
}
