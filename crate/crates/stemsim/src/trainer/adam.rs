//! Adam with bias correction, over the encoder's parameter tensors.

use crate::encoder::{EncoderParams, ParamGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
pub struct AdamState {
    m: ParamGrads,
    v: ParamGrads,
    step: u64,
}

impl AdamState {
    pub fn new(params: &EncoderParams) -> Self {
        AdamState {
            m: ParamGrads::zeros_like(params),
            v: ParamGrads::zeros_like(params),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

pub(crate) fn adam_update_slice(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    cfg: &AdamConfig,
) {
    let bias1 = 1.0 - cfg.beta1.powi(step as i32);
    let bias2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// One Adam update. Errors on shape mismatch or non-finite gradients;
/// parameters are untouched in either case.
pub fn adam_step(
    params: &mut EncoderParams,
    grads: &ParamGrads,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    {
        let param_tensors = params.flat_tensors();
        let grad_tensors = grads.flat_tensors();
        if param_tensors.len() != grad_tensors.len()
            || param_tensors
                .iter()
                .zip(&grad_tensors)
                .any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::DimensionMismatch(
                "gradient tensors do not match parameter tensors".into(),
            ));
        }
        for (t, g) in grad_tensors.iter().enumerate() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient(format!("tensor {t}")));
            }
        }
    }

    state.step += 1;
    let step = state.step;
    for (((p, g), m), v) in params
        .flat_tensors_mut()
        .into_iter()
        .zip(grads.flat_tensors())
        .zip(state.m.flat_tensors_mut())
        .zip(state.v.flat_tensors_mut())
    {
        adam_update_slice(p, g, m, v, step, cfg);
    }
    Ok(())
}
