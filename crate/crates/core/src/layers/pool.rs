use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::CompensatedSum;
use crate::matrix::Matrix;

/// Mean over the time axis of a `T × H` input.
pub fn global_mean_pool_forward(input: &Matrix) -> Result<Vec<f64>> {
    mean_of_first_rows(input, input.rows())
}

/// Mean over the first `count` rows only.
pub fn mean_of_first_rows(input: &Matrix, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::EmptySequence("mean pooling over zero timesteps".into()));
    }
    if count > input.rows() {
        return Err(Error::Precondition(alloc::format!(
            "pooling {} rows of a {}-row input",
            count,
            input.rows()
        )));
    }
    let mut sums = vec![CompensatedSum::default(); input.cols()];
    for t in 0..count {
        for (s, &v) in sums.iter_mut().zip(input.row(t)) {
            s.add(v);
        }
    }
    Ok(sums.iter().map(|s| s.mean(count)).collect())
}

/// Spreads `upstream / T` to each of the `T` timesteps.
pub fn global_mean_pool_backward(t_len: usize, upstream: &[f64]) -> Result<Matrix> {
    if t_len == 0 {
        return Err(Error::EmptySequence("mean pooling over zero timesteps".into()));
    }
    let mut out = Matrix::zeros(t_len, upstream.len());
    let scale = 1.0 / t_len as f64;
    for t in 0..t_len {
        for (o, &u) in out.row_mut(t).iter_mut().zip(upstream) {
            *o = u * scale;
        }
    }
    Ok(out)
}
