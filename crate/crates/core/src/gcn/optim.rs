use serde::{Deserialize, Serialize};

use super::backward::Gradients;
use super::model::GcnModel;
use crate::error::{Error, Result};

/// Optimisation hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_init: 1e-3,
            lr_min: 1e-4,
            weight_decay: 5e-4,
            epochs: 100,
            batch_size: 32,
            seed: 1000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr_init", self.lr_init),
            ("lr_min", self.lr_min),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lr_min > self.lr_init {
            return Err(Error::invalid(format!(
                "lr_min ({}) exceeds lr_init ({})",
                self.lr_min, self.lr_init
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid("weight_decay must be non-negative"));
        }
        for (name, b) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Cosine annealing from `lr_init` at epoch 0 to `lr_min` at the last epoch.
pub fn lr_schedule(epoch: usize, total_epochs: usize, config: &TrainConfig) -> f64 {
    if total_epochs <= 1 {
        return config.lr_init;
    }
    let progress = epoch as f64 / (total_epochs - 1) as f64;
    config.lr_min
        + 0.5 * (config.lr_init - config.lr_min) * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(model: &GcnModel, config: &TrainConfig) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
        }
    }
}

/// One Adam update with bias correction. Weight decay is decoupled: every
/// parameter first shrinks by `lr * weight_decay * p`, then takes the Adam
/// step.
pub fn adam_step(
    model: &mut GcnModel,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    state.step += 1;
    let t = state.step as i32;
    let (beta1, beta2, eps) = (state.beta1, state.beta2, state.eps);
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);

    let params = model.parameters_mut();
    let grads = grads.as_slices();
    let ms = state.m.as_slices_mut();
    let vs = state.v.as_slices_mut();
    if params.len() != grads.len() || params.len() != ms.len() {
        return Err(Error::Contract(
            "gradient layout does not match the model".into(),
        ));
    }
    for (((p, g), m), v) in params.into_iter().zip(grads).zip(ms).zip(vs) {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::Contract(
                "gradient tensor size does not match the model".into(),
            ));
        }
        for i in 0..p.len() {
            p[i] -= lr * weight_decay * p[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
