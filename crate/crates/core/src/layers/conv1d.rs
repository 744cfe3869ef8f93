use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::matrix::Matrix;
use crate::param::Parameter;
use crate::rng::Rng;

/// Valid (unpadded) 1-D convolution over the time axis.
///
/// `weights` holds a `k × E × F` tensor flattened to a `(k·E) × F` matrix,
/// so row `i·E + e` carries tap `i` of input channel `e`. Because the input
/// is row-major, the window starting at `t` is the contiguous slice
/// `input[t·E .. (t+k)·E]`.
pub fn conv1d_forward(input: &Matrix, weights: &Matrix, bias: &[f64], k: usize) -> Result<Matrix> {
    let (t_len, e) = input.shape();
    check_shapes(t_len, e, weights, bias.len(), k)?;
    let f = weights.cols();
    let out_len = t_len - k + 1;
    let mut out = Matrix::zeros(out_len, f);
    let x = input.values();
    for t in 0..out_len {
        let window = &x[t * e..(t + k) * e];
        let row = out.row_mut(t);
        row.copy_from_slice(bias);
        for (j, &xv) in window.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, &w) in row.iter_mut().zip(weights.row(j)) {
                *o += xv * w;
            }
        }
    }
    Ok(out)
}

/// Returns `(input_grad, weight_grad, bias_grad)` for the forward call on
/// `input` with the same `weights` and kernel size.
pub fn conv1d_backward(
    input: &Matrix,
    weights: &Matrix,
    k: usize,
    upstream: &Matrix,
) -> Result<(Matrix, Matrix, Vec<f64>)> {
    let (t_len, e) = input.shape();
    let f = weights.cols();
    check_shapes(t_len, e, weights, f, k)?;
    upstream.ensure_shape(t_len - k + 1, f, "conv1d upstream gradient")?;
    let mut d_input = Matrix::zeros(t_len, e);
    let mut d_weights = Matrix::zeros(k * e, f);
    let mut d_bias = vec![0.0; f];
    let x = input.values();
    for t in 0..upstream.rows() {
        let up = upstream.row(t);
        if up.iter().all(|&u| u == 0.0) {
            continue;
        }
        for (db, &u) in d_bias.iter_mut().zip(up) {
            *db += u;
        }
        let window = &x[t * e..(t + k) * e];
        let d_window = &mut d_input.values_mut()[t * e..(t + k) * e];
        for j in 0..k * e {
            let w_row = weights.row(j);
            d_window[j] += crate::math::dot(w_row, up);
            let xv = window[j];
            if xv != 0.0 {
                for (dw, &u) in d_weights.row_mut(j).iter_mut().zip(up) {
                    *dw += xv * u;
                }
            }
        }
    }
    Ok((d_input, d_weights, d_bias))
}

fn check_shapes(t_len: usize, e: usize, weights: &Matrix, bias_len: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Precondition("kernel size must be at least 1".into()));
    }
    if t_len < k {
        return Err(Error::Precondition(alloc::format!(
            "sequence length {} shorter than kernel size {}",
            t_len,
            k
        )));
    }
    if weights.cols() == 0 {
        return Err(shape_err!("convolution needs at least one filter"));
    }
    weights.ensure_shape(k * e, weights.cols(), "conv1d weights")?;
    if bias_len != weights.cols() {
        return Err(shape_err!("bias of {} for {} filters", bias_len, weights.cols()));
    }
    Ok(())
}

/// Convolution layer owning its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub kernel_size: usize,
    pub in_dim: usize,
    pub weight: Parameter,
    pub bias: Parameter,
}

impl Conv1d {
    pub fn new(kernel_size: usize, in_dim: usize, filters: usize, init_scale: f64, rng: &mut Rng) -> Self {
        Self {
            kernel_size,
            in_dim,
            weight: Parameter::new(Matrix::uniform(kernel_size * in_dim, filters, init_scale, rng)),
            bias: Parameter::zeros(1, filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        conv1d_forward(input, &self.weight.value, self.bias.value.values(), self.kernel_size)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, input: &Matrix, upstream: &Matrix) -> Result<Matrix> {
        let (dx, dw, db) = conv1d_backward(input, &self.weight.value, self.kernel_size, upstream)?;
        self.weight.grad.add_scaled(&dw, 1.0)?;
        for (g, d) in self.bias.grad.values_mut().iter_mut().zip(db) {
            *g += d;
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight triple loop over positions, taps and channels.
    fn brute_force(input: &Matrix, w: &[Vec<Vec<f64>>], bias: &[f64]) -> Vec<Vec<f64>> {
        let k = w.len();
        let (t_len, e) = input.shape();
        let f = bias.len();
        let mut out = vec![vec![0.0; f]; t_len - k + 1];
        for t in 0..t_len - k + 1 {
            for ff in 0..f {
                let mut acc = bias[ff];
                for i in 0..k {
                    for ee in 0..e {
                        acc += input[(t + i, ee)] * w[i][ee][ff];
                    }
                }
                out[t][ff] = acc;
            }
        }
        out
    }

    fn flatten(w: &[Vec<Vec<f64>>]) -> Matrix {
        let rows: Vec<Vec<f64>> = w.iter().flat_map(|tap| tap.iter().cloned()).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn hand_example() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let w = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let out = conv1d_forward(&x, &w, &[0.0], 2).unwrap();
        assert_eq!(out.values(), &[3.0, 5.0]);
    }

    #[test]
    fn identity_kernel() {
        let x = Matrix::from_rows(&[vec![0.5], vec![-2.0], vec![7.0]]).unwrap();
        let w = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(conv1d_forward(&x, &w, &[0.0], 1).unwrap(), x);
    }

    #[test]
    fn matches_triple_loop() {
        let mut rng = Rng::new(11);
        for _ in 0..10 {
            let x = Matrix::uniform(5, 3, 1.0, &mut rng);
            let w: Vec<Vec<Vec<f64>>> = (0..3)
                .map(|_| (0..3).map(|_| (0..2).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).collect())
                .collect();
            let bias = [rng.uniform(), rng.uniform()];
            let fast = conv1d_forward(&x, &flatten(&w), &bias, 3).unwrap();
            let slow = brute_force(&x, &w, &bias);
            for t in 0..3 {
                for f in 0..2 {
                    assert!((fast[(t, f)] - slow[t][f]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn backward_hand_example() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let w = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let up = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let (dx, dw, db) = conv1d_backward(&x, &w, 2, &up).unwrap();
        assert_eq!(dw.values(), &[3.0, 5.0]);
        assert_eq!(db, vec![2.0]);
        assert_eq!(dx.values(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn zero_upstream_zero_grads() {
        let mut rng = Rng::new(3);
        let x = Matrix::uniform(6, 2, 1.0, &mut rng);
        let w = Matrix::uniform(6, 4, 1.0, &mut rng);
        let (dx, dw, db) = conv1d_backward(&x, &w, 3, &Matrix::zeros(4, 4)).unwrap();
        assert!(dx.values().iter().chain(dw.values()).chain(&db).all(|&v| v == 0.0));
    }

    #[test]
    fn short_input_is_precondition_error() {
        let x = Matrix::zeros(2, 1);
        let w = Matrix::zeros(3, 1);
        assert!(matches!(conv1d_forward(&x, &w, &[0.0], 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn mismatched_weights_is_shape_error() {
        let x = Matrix::zeros(4, 2);
        let w = Matrix::zeros(3, 1);
        assert!(matches!(conv1d_forward(&x, &w, &[0.0], 2), Err(Error::Shape(_))));
        let w = Matrix::zeros(4, 1);
        assert!(matches!(conv1d_forward(&x, &w, &[0.0, 1.0], 2), Err(Error::Shape(_))));
    }
}
