use alloc::vec::Vec;

use crate::error::{shape_err, Result};
use crate::math::tanh;
use crate::matrix::Matrix;
use crate::param::Parameter;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => tanh(x),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Fully connected layer `out = act(W·x + b)` with `W` shaped `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Parameter,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl Dense {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation, init_scale: f64, rng: &mut Rng) -> Self {
        Self {
            weight: Parameter::new(Matrix::uniform(out_dim, in_dim, init_scale, rng)),
            bias: Parameter::zeros(1, out_dim),
            activation,
        }
    }

    pub fn from_weights(weight: Matrix, bias: &[f64], activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(shape_err!("bias of {} for {} outputs", bias.len(), weight.rows()));
        }
        Ok(Self {
            weight: Parameter::new(weight),
            bias: Parameter::new(Matrix::from_vec(1, bias.len(), bias.to_vec())?),
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        let mut out = self.weight.value.matvec(input)?;
        for (o, &b) in out.iter_mut().zip(self.bias.value.values()) {
            *o = self.activation.apply(*o + b);
        }
        let cache = DenseCache {
            input: input.to_vec(),
            output: out.clone(),
        };
        Ok((out, cache))
    }

    pub fn backward(&mut self, cache: &DenseCache, upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.out_dim() {
            return Err(shape_err!("dense upstream {} vs {} outputs", upstream.len(), self.out_dim()));
        }
        let d_pre: Vec<f64> = upstream
            .iter()
            .zip(&cache.output)
            .map(|(&u, &y)| u * self.activation.derivative_from_output(y))
            .collect();
        self.weight.grad.add_outer(&d_pre, &cache.input, 1.0)?;
        for (g, &d) in self.bias.grad.values_mut().iter_mut().zip(&d_pre) {
            *g += d;
        }
        self.weight.value.matvec_t(&d_pre)
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.weight, &mut self.bias]
    }
}
