use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::matrix::Matrix;

/// Trainable block with its gradient accumulator and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Matrix,
    pub grad: Matrix,
    m: Matrix,
    v: Matrix,
    step_count: u64,
}

impl Parameter {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        Self {
            value,
            grad: Matrix::zeros(r, c),
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Matrix::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn moments(&self) -> (&Matrix, &Matrix) {
        (&self.m, &self.v)
    }

    /// Reassembles a parameter including optimizer state.
    pub fn from_parts(value: Matrix, m: Matrix, v: Matrix, step_count: u64) -> Result<Self> {
        let (r, c) = value.shape();
        m.ensure_shape(r, c, "first moment")?;
        v.ensure_shape(r, c, "second moment")?;
        Ok(Self {
            value,
            grad: Matrix::zeros(r, c),
            m,
            v,
            step_count,
        })
    }
}

/// Adam hyperparameters; the defaults are the usual Keras ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.epsilon > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(alloc::format!("invalid Adam settings {:?}", self)))
        }
    }
}

/// One bias-corrected Adam step. Clears the gradient afterwards.
pub fn adam_update(param: &mut Parameter, cfg: &AdamConfig) {
    param.step_count += 1;
    let t = param.step_count as f64;
    let bc1 = 1.0 - libm::pow(cfg.beta1, t);
    let bc2 = 1.0 - libm::pow(cfg.beta2, t);
    let values = param.value.values_mut();
    let grads = param.grad.values_mut();
    let ms = param.m.values_mut();
    let vs = param.v.values_mut();
    for i in 0..values.len() {
        let g = grads[i];
        ms[i] = cfg.beta1 * ms[i] + (1.0 - cfg.beta1) * g;
        vs[i] = cfg.beta2 * vs[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = ms[i] / bc1;
        let v_hat = vs[i] / bc2;
        values[i] -= cfg.lr * m_hat / (sqrt(v_hat) + cfg.epsilon);
        grads[i] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_grad_leaves_value() {
        let mut p = Parameter::new(Matrix::from_vec(1, 2, vec![0.3, -0.2]).unwrap());
        let before = p.value.clone();
        adam_update(&mut p, &AdamConfig::default());
        assert_eq!(p.value, before);
        assert_eq!(p.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Parameter::zeros(1, 1);
        p.grad[(0, 0)] = 1.0;
        adam_update(&mut p, &AdamConfig::default());
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p.value[(0, 0)] - expected).abs() < 1e-15);
        assert_eq!(p.grad[(0, 0)], 0.0);
    }

    #[test]
    fn first_step_sign_follows_gradient() {
        let mut p = Parameter::zeros(1, 2);
        p.grad[(0, 0)] = -250.0;
        p.grad[(0, 1)] = 3e-3;
        adam_update(&mut p, &AdamConfig::default());
        assert!((p.value[(0, 0)] - 0.001).abs() < 1e-9);
        assert!((p.value[(0, 1)] + 0.001).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
