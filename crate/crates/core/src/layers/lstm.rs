use alloc::vec;

use crate::error::{Error, Result};
use crate::math::{sigmoid, tanh};
use crate::matrix::Matrix;
use crate::param::Parameter;
use crate::rng::Rng;

/// Forward-direction LSTM layer without peepholes.
///
/// Gate pre-activations are stacked as `[input, forget, candidate, output]`
/// blocks of `H` rows each in `w_input` (`4H × D`), `w_recurrent` (`4H × H`)
/// and `bias` (`1 × 4H`). `h_0 = c_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub w_input: Parameter,
    pub w_recurrent: Parameter,
    pub bias: Parameter,
}

/// Per-timestep activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input: Matrix,
    /// `T × 4H` post-nonlinearity gate values.
    gates: Matrix,
    cells: Matrix,
    tanh_cells: Matrix,
    pub hidden: Matrix,
}

impl Lstm {
    /// Uniform `±init_scale` weights, forget bias 1, other biases 0.
    pub fn new(in_dim: usize, units: usize, init_scale: f64, rng: &mut Rng) -> Self {
        let mut bias = Matrix::zeros(1, 4 * units);
        bias.values_mut()[units..2 * units].fill(1.0);
        Self {
            w_input: Parameter::new(Matrix::uniform(4 * units, in_dim, init_scale, rng)),
            w_recurrent: Parameter::new(Matrix::uniform(4 * units, units, init_scale, rng)),
            bias: Parameter::new(bias),
        }
    }

    pub fn units(&self) -> usize {
        self.w_recurrent.value.cols()
    }

    pub fn in_dim(&self) -> usize {
        self.w_input.value.cols()
    }

    /// Returns hidden states for every timestep (`T × H`).
    pub fn forward(&self, input: &Matrix) -> Result<LstmCache> {
        let (t_len, d) = input.shape();
        if t_len == 0 {
            return Err(Error::EmptySequence("LSTM over zero frames".into()));
        }
        let h = self.units();
        input.ensure_shape(t_len, self.in_dim(), "LSTM input")?;
        debug_assert_eq!(d, self.in_dim());
        let mut gates = Matrix::zeros(t_len, 4 * h);
        let mut cells = Matrix::zeros(t_len, h);
        let mut tanh_cells = Matrix::zeros(t_len, h);
        let mut hidden = Matrix::zeros(t_len, h);
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for t in 0..t_len {
            let mut z = self.w_input.value.matvec(input.row(t))?;
            let rec = self.w_recurrent.value.matvec(&h_prev)?;
            for ((zv, r), b) in z.iter_mut().zip(&rec).zip(self.bias.value.values()) {
                *zv += r + b;
            }
            let g_row = gates.row_mut(t);
            for j in 0..h {
                g_row[j] = sigmoid(z[j]);
                g_row[h + j] = sigmoid(z[h + j]);
                g_row[2 * h + j] = tanh(z[2 * h + j]);
                g_row[3 * h + j] = sigmoid(z[3 * h + j]);
            }
            for j in 0..h {
                let (i, f, g, o) = (g_row[j], g_row[h + j], g_row[2 * h + j], g_row[3 * h + j]);
                let c = f * c_prev[j] + i * g;
                let tc = tanh(c);
                cells[(t, j)] = c;
                tanh_cells[(t, j)] = tc;
                hidden[(t, j)] = o * tc;
            }
            h_prev.copy_from_slice(hidden.row(t));
            c_prev.copy_from_slice(cells.row(t));
        }
        Ok(LstmCache {
            input: input.clone(),
            gates,
            cells,
            tanh_cells,
            hidden,
        })
    }

    /// Backpropagation through time. `upstream` is `dLoss/dh_t` for every
    /// timestep; returns `dLoss/dx_t`.
    pub fn backward(&mut self, cache: &LstmCache, upstream: &Matrix) -> Result<Matrix> {
        let (t_len, h) = cache.hidden.shape();
        upstream.ensure_shape(t_len, h, "LSTM upstream gradient")?;
        let mut d_input = Matrix::zeros(t_len, self.in_dim());
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        let zeros = vec![0.0; h];
        for t in (0..t_len).rev() {
            let g_row = cache.gates.row(t);
            let c_prev = if t > 0 { cache.cells.row(t - 1) } else { &zeros[..] };
            let h_prev = if t > 0 { cache.hidden.row(t - 1) } else { &zeros[..] };
            for j in 0..h {
                let (i, f, g, o) = (g_row[j], g_row[h + j], g_row[2 * h + j], g_row[3 * h + j]);
                let tc = cache.tanh_cells[(t, j)];
                let dh = upstream[(t, j)] + dh_next[j];
                let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            self.w_input.grad.add_outer(&dz, cache.input.row(t), 1.0)?;
            self.w_recurrent.grad.add_outer(&dz, h_prev, 1.0)?;
            for (g, &d) in self.bias.grad.values_mut().iter_mut().zip(&dz) {
                *g += d;
            }
            let dx = self.w_input.value.matvec_t(&dz)?;
            d_input.row_mut(t).copy_from_slice(&dx);
            dh_next = self.w_recurrent.value.matvec_t(&dz)?;
        }
        Ok(d_input)
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 3] {
        [&mut self.w_input, &mut self.w_recurrent, &mut self.bias]
    }

    pub fn params(&self) -> [&Parameter; 3] {
        [&self.w_input, &self.w_recurrent, &self.bias]
    }
}

impl LstmCache {
    pub fn hidden_states(&self) -> &Matrix {
        &self.hidden
    }
}
