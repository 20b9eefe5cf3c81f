use serde::{Deserialize, Serialize};

use super::layers::Layer;
use super::tensor::Float;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
        }
    }
}

/// Adam optimizer. Moment buffers are keyed by the order in which a model
/// visits its trainable params, so one instance serves exactly one model.
pub struct Adam<T> {
    config: AdamConfig,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Float> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    /// Applies one update from the accumulated gradients, then clears them.
    pub fn step(&mut self, model: &mut dyn Layer<T>) {
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (ob1, ob2) = (T::of(1.0 - c.beta1), T::of(1.0 - c.beta2));
        let step_size = T::of(c.lr / bc1);
        let inv_bc2 = T::of(1.0 / bc2);
        let eps = T::of(c.eps);
        let mut slot = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        model.visit("", &mut |_, p| {
            if !p.trainable {
                return;
            }
            if ms.len() <= slot {
                ms.push(vec![T::zero(); p.value.len()]);
                vs.push(vec![T::zero(); p.value.len()]);
            }
            let (m, v) = (&mut ms[slot], &mut vs[slot]);
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + ob1 * g;
                v[i] = b2 * v[i] + ob2 * g * g;
                p.value[i] = p.value[i] - step_size * m[i] / ((v[i] * inv_bc2).sqrt() + eps);
            }
            p.zero_grad();
            slot += 1;
        });
    }
}

/// Clears every gradient of `model`.
pub fn zero_grad<T: Float>(model: &mut dyn Layer<T>) {
    model.visit("", &mut |_, p| p.zero_grad());
}

/// Number of trainable scalars.
pub fn count_trainable<T: Float>(model: &mut dyn Layer<T>) -> usize {
    let mut n = 0;
    model.visit("", &mut |_, p| {
        if p.trainable {
            n += p.value.len();
        }
    });
    n
}
