use ndarray::Zip;

use crate::error::{Error, Result};
use crate::model::Module;

/// Adam with decoupled weight decay. Decay is scaled by the learning rate,
/// so a zero rate leaves parameters untouched.
#[derive(Debug, Clone)]
pub struct AdamW<M: Module> {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: M,
    v: M,
    step: i32,
}

impl<M: Module> AdamW<M> {
    pub fn new(model: &M, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: model.zeros_like(),
            v: model.zeros_like(),
            step: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, model: &mut M, grad: &M) {
        self.step += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.learning_rate);
        let bc1 = 1.0 - b1.powi(self.step);
        let bc2 = 1.0 - b2.powi(self.step);
        let decay = 1.0 - lr * self.weight_decay;
        let params = model.params_mut();
        let grads = grad.params();
        let ms = self.m.params_mut();
        let vs = self.v.params_mut();
        for ((((_, mut p), (_, g)), (_, mut m)), (_, mut v)) in
            params.into_iter().zip(grads).zip(ms).zip(vs)
        {
            Zip::from(&mut p)
                .and(&g)
                .and(&mut m)
                .and(&mut v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    let update = (*m / bc1) / ((*v / bc2).sqrt() + eps);
                    *p = *p * decay - lr * update;
                });
        }
    }
}

/// Rescales `grad` to at most `max_norm`; returns the norm before clipping.
pub fn clip_gradient<M: Module>(grad: &mut M, max_norm: f64, context: &str) -> Result<f64> {
    let norm = grad.sq_norm().sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite(format!("gradient norm at {context}")));
    }
    if norm > max_norm {
        grad.scale(max_norm / norm);
    }
    Ok(norm)
}
