use serde::{Deserialize, Serialize};

use super::{Gradients, NeuralError, ParamSet, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-4 }
    }
}

/// Learning rate after `epoch` completed epochs: `base * gamma^(epoch / step)`.
pub fn step_lr(base: f64, epoch: usize, step: usize, gamma: f64) -> f64 {
    if step == 0 {
        return base;
    }
    base * gamma.powi((epoch / step) as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>, config: AdamConfig) -> Self {
        let zeros = || params.iter().map(|(_, t)| Tensor::zeros(t.rows(), t.cols())).collect();
        AdamState { config, step: 0, m: zeros(), v: zeros() }
    }

    /// One update at learning rate `lr`.
    pub fn update(&mut self, params: &mut ParamSet<T>, grads: &Gradients<T>, lr: f64) -> Result<(), NeuralError> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(NeuralError::Shape("gradient count differs from parameter count".into()));
        }
        for id in params.ids() {
            if grads.get(id).shape() != params.get(id).shape() || self.m[id.0].shape() != params.get(id).shape() {
                return Err(NeuralError::Shape(format!("gradient shape mismatch for {}", params.name(id))));
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (one_b1, one_b2) = (T::from_f64(1.0 - c.beta1), T::from_f64(1.0 - c.beta2));
        let bc1 = T::from_f64(1.0 - c.beta1.powi(t));
        let bc2 = T::from_f64(1.0 - c.beta2.powi(t));
        let (lr, eps, wd) = (T::from_f64(lr), T::from_f64(c.eps), T::from_f64(c.weight_decay));
        for id in params.ids().collect::<Vec<_>>() {
            let g = grads.get(id).data();
            let (m, v) = (self.m[id.0].data_mut(), self.v[id.0].data_mut());
            for (i, p) in params.get_mut(id).data_mut().iter_mut().enumerate() {
                let gi = g[i] + wd * *p;
                m[i] = b1 * m[i] + one_b1 * gi;
                v[i] = b2 * v[i] + one_b2 * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
