//! Central finite-difference gradient checking.

pub mod fragments;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::param::Parameter;

/// Finite-difference step.
pub const STEP: f64 = 1e-5;

/// Relative errors use `max(|analytic|, |numeric|, ABS_FLOOR)` as the
/// denominator so that entries whose true gradient is zero are compared on an
/// absolute scale instead of amplifying round-off.
pub const ABS_FLOOR: f64 = 1e-5;

/// Anything exposing a scalar loss over a fixed set of parameter blocks.
pub trait Differentiable {
    /// Parameter blocks in a stable order, with display names.
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)>;

    /// Loss at the current parameter values, without touching gradients.
    fn loss(&self) -> Result<f64>;

    /// Clears gradients, then computes the loss and accumulates analytic
    /// gradients into every block.
    fn loss_and_grad(&mut self) -> Result<f64>;

    /// Entries held constant during training (e.g. the padding embedding),
    /// skipped by the check.
    fn is_frozen(&self, _block: usize, _index: usize) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockError {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
}

/// Compares analytic gradients against central differences for every entry
/// of every block.
pub fn grad_check<D: Differentiable + ?Sized>(fragment: &mut D, tolerance: f64) -> Result<GradCheckReport> {
    let loss = fragment.loss_and_grad()?;
    if !loss.is_finite() {
        return Err(Error::Numeric(alloc::format!("loss is {}", loss)));
    }
    let analytic: Vec<(String, Matrix)> = fragment
        .blocks()
        .into_iter()
        .map(|(name, p)| (name, p.grad.clone()))
        .collect();

    let mut blocks = Vec::with_capacity(analytic.len());
    for (b, (name, grads)) in analytic.iter().enumerate() {
        let mut worst = BlockError {
            name: name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
        };
        for j in 0..grads.values().len() {
            if fragment.is_frozen(b, j) {
                continue;
            }
            let original = nudge(fragment, b, j, None);
            nudge(fragment, b, j, Some(original + STEP));
            let plus = fragment.loss()?;
            nudge(fragment, b, j, Some(original - STEP));
            let minus = fragment.loss()?;
            nudge(fragment, b, j, Some(original));
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(alloc::format!("non-finite loss perturbing {}[{}]", name, j)));
            }
            let numeric = (plus - minus) / (2.0 * STEP);
            let err = relative_error(grads.values()[j], numeric);
            if err > worst.max_rel_error {
                worst.max_rel_error = err;
                worst.worst_index = j;
            }
        }
        blocks.push(worst);
    }
    Ok(GradCheckReport { blocks, tolerance })
}

/// Returns the current value of entry `j` in block `b`, optionally replacing it.
fn nudge<D: Differentiable + ?Sized>(fragment: &mut D, b: usize, j: usize, set: Option<f64>) -> f64 {
    let mut blocks = fragment.blocks();
    let values = blocks[b].1.value.values_mut();
    let old = values[j];
    if let Some(v) = set {
        values[j] = v;
    }
    old
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{Activation, Dense};
    use crate::rng::Rng;
    use alloc::vec;
    use alloc::vec::Vec;

    /// Squared-sum loss over a linear layer.
    struct LinearFragment {
        layer: Dense,
        input: Vec<f64>,
        corrupt: bool,
    }

    impl Differentiable for LinearFragment {
        fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
            vec![("weight".into(), &mut self.layer.weight), ("bias".into(), &mut self.layer.bias)]
        }

        fn loss(&self) -> Result<f64> {
            let (out, _) = self.layer.forward(&self.input)?;
            Ok(out.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v).sum())
        }

        fn loss_and_grad(&mut self) -> Result<f64> {
            self.layer.weight.zero_grad();
            self.layer.bias.zero_grad();
            let (out, cache) = self.layer.forward(&self.input)?;
            let up: Vec<f64> = (0..out.len()).map(|i| i as f64 + 1.0).collect();
            self.layer.backward(&cache, &up)?;
            if self.corrupt {
                self.layer.weight.grad.values_mut()[0] *= 1.1;
            }
            Ok(out.iter().zip(&up).map(|(a, b)| a * b).sum())
        }
    }

    fn fragment(corrupt: bool) -> LinearFragment {
        let mut rng = Rng::new(9);
        let mut layer = Dense::new(4, 3, Activation::Linear, 1.0, &mut rng);
        layer.weight.value.values_mut()[0] = 0.7;
        LinearFragment {
            layer,
            input: vec![0.5, -1.0, 2.0, 0.25],
            corrupt,
        }
    }

    #[test]
    fn linear_layer_is_near_exact() {
        let report = grad_check(&mut fragment(false), 1e-7).unwrap();
        assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let report = grad_check(&mut fragment(true), 1e-4).unwrap();
        assert!(!report.passed());
        assert_eq!(report.blocks[0].worst_index, 0);
    }
}
