//! Adam parameter updates with bias correction.

use crate::error::{Error, Result};
use crate::model::conv::LayerBuf;
use crate::model::loss::Gradients;
use crate::model::net::ConvNet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// First/second moment estimates, shaped like the network's parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    m: Vec<LayerBuf>,
    v: Vec<LayerBuf>,
}

impl AdamState {
    pub fn new(net: &ConvNet) -> AdamState {
        let zeros: Vec<LayerBuf> = net.layers().iter().map(|l| l.zero_buf()).collect();
        AdamState {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One bias-corrected update of every parameter in place.
    pub fn step(&mut self, net: &mut ConvNet, grads: &Gradients, cfg: &AdamConfig) -> Result<()> {
        cfg.validate()?;
        if grads.layers.len() != self.m.len() {
            return Err(Error::InvalidArgument(
                "gradient layout does not match the optimizer state".into(),
            ));
        }
        self.step += 1;
        let mc = 1.0 - cfg.beta1.powi(self.step as i32);
        let vc = 1.0 - cfg.beta2.powi(self.step as i32);
        for (l, layer) in net.layers_mut().iter_mut().enumerate() {
            update(
                layer.weights_mut(),
                &grads.layers[l].weights,
                &mut self.m[l].weights,
                &mut self.v[l].weights,
                cfg,
                mc,
                vc,
            );
            update(
                layer.bias_mut(),
                &grads.layers[l].bias,
                &mut self.m[l].bias,
                &mut self.v[l].bias,
                cfg,
                mc,
                vc,
            );
        }
        Ok(())
    }
}

fn update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &AdamConfig,
    mc: f64,
    vc: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / mc;
        let v_hat = v[i] / vc;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}
