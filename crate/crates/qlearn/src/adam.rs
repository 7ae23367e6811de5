//! Adaptive-moment gradient descent with per-component clipping.

use crate::network::{NetGrads, QNetwork};

/// Adam state over the network parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: NetGrads,
    v: NetGrads,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: NetGrads::zeroed(),
            v: NetGrads::zeroed(),
        }
    }

    pub fn updates(&self) -> u64 {
        self.t
    }

    /// Apply one update. Gradients are clipped per component to
    /// `grad_clip` before entering the moment estimates.
    pub fn step(&mut self, net: &mut QNetwork, grads: &NetGrads, grad_clip: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let params = net.param_slices_mut();
        let grads = grads.slices();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        for (((param, grad), m), v) in params.into_iter().zip(grads).zip(ms).zip(vs) {
            for i in 0..param.len() {
                let g = grad[i].clamp(-grad_clip, grad_clip);
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
