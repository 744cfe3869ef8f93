use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::param::Parameter;
use crate::rng::Rng;

/// Index of the padding row, which stays at zero.
pub const PAD_INDEX: usize = 0;

/// Token embedding table (`|V| × E`).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Parameter,
}

impl Embedding {
    pub fn new(vocab_size: usize, dim: usize, init_scale: f64, rng: &mut Rng) -> Self {
        let mut table = Matrix::uniform(vocab_size, dim, init_scale, rng);
        if vocab_size > PAD_INDEX {
            table.row_mut(PAD_INDEX).fill(0.0);
        }
        Self {
            table: Parameter::new(table),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.value.cols()
    }

    pub fn lookup(&self, indices: &[usize]) -> Result<Matrix> {
        let dim = self.dim();
        let mut out = Matrix::zeros(indices.len(), dim);
        for (t, &idx) in indices.iter().enumerate() {
            if idx >= self.vocab_size() {
                return Err(Error::Index(alloc::format!(
                    "token index {} with vocabulary of {}",
                    idx,
                    self.vocab_size()
                )));
            }
            out.row_mut(t).copy_from_slice(self.table.value.row(idx));
        }
        Ok(out)
    }

    /// Scatters row gradients back into the table; the padding row receives none.
    pub fn backward(&mut self, indices: &[usize], upstream: &Matrix) -> Result<()> {
        upstream.ensure_shape(indices.len(), self.dim(), "embedding upstream gradient")?;
        for (t, &idx) in indices.iter().enumerate() {
            if idx == PAD_INDEX {
                continue;
            }
            for (g, &u) in self.table.grad.row_mut(idx).iter_mut().zip(upstream.row(t)) {
                *g += u;
            }
        }
        Ok(())
    }

    /// Re-zeroes the padding row; call after each optimizer step.
    pub fn clamp_padding(&mut self) {
        self.table.value.row_mut(PAD_INDEX).fill(0.0);
        self.table.grad.row_mut(PAD_INDEX).fill(0.0);
    }
}
