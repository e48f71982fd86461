//! Adam optimizer with bias correction.

use crate::error::{Error, Result};

pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamHyper {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            epsilon: ADAM_EPSILON,
        }
    }
}

/// First/second moment buffers for one parameter list, plus the shared step
/// counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(hyper: AdamHyper, param_lens: &[usize]) -> Self {
        Self {
            hyper,
            m: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: param_lens.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    /// One update: p -= lr * m_hat / (sqrt(v_hat) + eps).
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "optimizer tracks {} tensors, got {} params / {} grads",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powi(t);
        let bc2 = 1.0 - h.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::ShapeMismatch {
                    left: vec![p.len()],
                    right: vec![m.len()],
                });
            }
            for i in 0..p.len() {
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= h.lr * m_hat / (v_hat.sqrt() + h.epsilon);
            }
        }
        Ok(())
    }
}
