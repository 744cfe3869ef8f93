use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln};

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    pub loss: f64,
    pub probs: Vec<f64>,
    /// `probs − onehot(true_class)`
    pub grad: Vec<f64>,
}

pub fn softmax_cross_entropy(logits: &[f64], true_class: usize) -> Result<CrossEntropy> {
    if logits.len() < 2 {
        return Err(Error::Precondition("cross-entropy needs at least two classes".into()));
    }
    if true_class >= logits.len() {
        return Err(Error::Index(alloc::format!(
            "class {} with {} logits",
            true_class,
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = ln(logits.iter().map(|&z| exp(z - max)).sum::<f64>());
    let loss = log_sum - (logits[true_class] - max);
    let probs = softmax(logits);
    let mut grad = probs.clone();
    grad[true_class] -= 1.0;
    Ok(CrossEntropy { loss, probs, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_two_class() {
        let ce = softmax_cross_entropy(&[0.3, 0.3], 1).unwrap();
        assert!((ce.loss - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn closed_form() {
        let ce = softmax_cross_entropy(&[1.0, 0.0], 0).unwrap();
        let expected = libm::log1p(libm::exp(-1.0));
        assert!((ce.loss - expected).abs() < 1e-15);
        assert!((ce.loss - 0.313262).abs() < 1e-6);
    }

    #[test]
    fn bad_class_index() {
        assert!(matches!(softmax_cross_entropy(&[0.0, 1.0], 2), Err(Error::Index(_))));
    }

    proptest! {
        #[test]
        fn probs_simplex(logits in proptest::collection::vec(-700.0f64..700.0, 2..12), c in 0usize..2) {
            let ce = softmax_cross_entropy(&logits, c).unwrap();
            prop_assert!(ce.probs.iter().all(|&p| p >= 0.0));
            prop_assert!((ce.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(ce.grad.iter().sum::<f64>().abs() < 1e-12);
            prop_assert!(ce.loss.is_finite() && ce.loss >= 0.0);
        }
    }
}
