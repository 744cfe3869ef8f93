use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Inverted dropout. Returns the output and the per-unit multiplier that the
/// backward pass applies to the upstream gradient.
pub fn dropout(input: &[f64], drop_prob: f64, mode: DropoutMode, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..1.0).contains(&drop_prob) {
        return Err(Error::Config(alloc::format!(
            "drop probability {} outside [0, 1)",
            drop_prob
        )));
    }
    if mode == DropoutMode::Eval || drop_prob == 0.0 {
        return Ok((input.to_vec(), alloc::vec![1.0; input.len()]));
    }
    let keep_scale = 1.0 / (1.0 - drop_prob);
    let mask: Vec<f64> = input
        .iter()
        .map(|_| if rng.bernoulli(drop_prob) { 0.0 } else { keep_scale })
        .collect();
    let out = input.iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_prob_is_identity() {
        let mut rng = Rng::new(0);
        let x = [1.0, -2.0, 3.5];
        for mode in [DropoutMode::Train, DropoutMode::Eval] {
            assert_eq!(dropout(&x, 0.0, mode, &mut rng).unwrap().0, x.to_vec());
        }
    }

    #[test]
    fn eval_is_identity() {
        let mut rng = Rng::new(0);
        let x = [1.0, -2.0, 3.5];
        assert_eq!(dropout(&x, 0.5, DropoutMode::Eval, &mut rng).unwrap().0, x.to_vec());
    }

    #[test]
    fn train_mean_preserved() {
        let mut rng = Rng::new(42);
        let x = vec![3.0; 100_000];
        let (out, _) = dropout(&x, 0.5, DropoutMode::Train, &mut rng).unwrap();
        let mean: f64 = out.iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 3.0).abs() / 3.0 < 0.02, "mean {}", mean);
        assert!(out.iter().all(|&v| v == 0.0 || v == 6.0));
    }

    #[test]
    fn rejects_out_of_range() {
        let mut rng = Rng::new(0);
        assert!(dropout(&[1.0], 1.0, DropoutMode::Train, &mut rng).is_err());
        assert!(dropout(&[1.0], -0.1, DropoutMode::Eval, &mut rng).is_err());
    }
}
