//! Acoustic branch: stacked forward LSTMs over frame features, global mean
//! pooling over time, a relu dense layer with dropout, and a softmax output.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::layers::{dropout, softmax, Activation, Dense, DenseCache, DropoutMode, Lstm, LstmCache};
use crate::layers::pool::{global_mean_pool_backward, global_mean_pool_forward};
use crate::matrix::Matrix;
use crate::param::{adam_update, AdamConfig, Parameter};
use crate::rng::Rng;

/// Conventional frame feature dimension (eGeMAPS).
pub const DEFAULT_FEATURE_DIM: usize = 88;
pub const LSTM_INIT_SCALE: f64 = 0.05;

/// Frame-level features of one utterance, one row per 10 ms frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub utterance_id: String,
    pub frames: Matrix,
}

impl FeatureSequence {
    pub fn new(utterance_id: impl Into<String>, frames: Matrix) -> Result<Self> {
        if frames.rows() == 0 {
            return Err(Error::EmptySequence("feature sequence without frames".into()));
        }
        if !frames.is_finite() {
            return Err(Error::Numeric("feature sequence contains non-finite values".into()));
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            frames,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcousticPreset {
    /// 2 LSTM layers of 256 units, dense 256 then 4 classes, dropout 0.5.
    Iemocap,
    /// 1 LSTM layer of 96 units; the dense width reuses 96.
    Callcenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmConfig {
    pub input_dim: usize,
    pub num_lstm_layers: usize,
    pub units_per_layer: usize,
    pub dense_units: usize,
    pub num_classes: usize,
    pub dropout_prob: f64,
    pub batch_size: usize,
}

impl LstmConfig {
    pub fn preset(preset: AcousticPreset) -> Self {
        match preset {
            AcousticPreset::Iemocap => Self {
                input_dim: DEFAULT_FEATURE_DIM,
                num_lstm_layers: 2,
                units_per_layer: 256,
                dense_units: 256,
                num_classes: 4,
                dropout_prob: 0.5,
                batch_size: 40,
            },
            AcousticPreset::Callcenter => Self {
                input_dim: DEFAULT_FEATURE_DIM,
                num_lstm_layers: 1,
                units_per_layer: 96,
                dense_units: 96,
                num_classes: 3,
                dropout_prob: 0.5,
                batch_size: 40,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.num_lstm_layers == 0
            || self.units_per_layer == 0
            || self.dense_units == 0
            || self.batch_size == 0
        {
            return Err(Error::Config("LSTM sizes must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Config("at least two classes required".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(Error::Config(alloc::format!(
                "dropout probability {} outside [0, 1)",
                self.dropout_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub layers: Vec<Lstm>,
    pub hidden: Dense,
    pub output: Dense,
}

#[derive(Debug, Clone)]
pub struct AcousticForward {
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
    pub posteriors: Vec<f64>,
    caches: Vec<LstmCache>,
    hidden_cache: DenseCache,
    dropout_mask: Vec<f64>,
    output_cache: DenseCache,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticExample {
    pub frames: Matrix,
    pub label: usize,
}

impl LstmModel {
    pub fn new(config: LstmConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.num_lstm_layers);
        let mut in_dim = config.input_dim;
        for _ in 0..config.num_lstm_layers {
            layers.push(Lstm::new(in_dim, config.units_per_layer, LSTM_INIT_SCALE, rng));
            in_dim = config.units_per_layer;
        }
        let hidden_scale = libm::sqrt(6.0 / (config.units_per_layer + config.dense_units) as f64);
        let hidden = Dense::new(config.units_per_layer, config.dense_units, Activation::Relu, hidden_scale, rng);
        let out_scale = libm::sqrt(6.0 / (config.dense_units + config.num_classes) as f64);
        let output = Dense::new(config.dense_units, config.num_classes, Activation::Linear, out_scale, rng);
        Ok(Self {
            config,
            layers,
            hidden,
            output,
        })
    }

    pub fn forward(&self, frames: &Matrix, mode: DropoutMode, rng: &mut Rng) -> Result<AcousticForward> {
        if frames.rows() == 0 {
            return Err(Error::EmptySequence("acoustic forward over zero frames".into()));
        }
        if frames.cols() != self.config.input_dim {
            return Err(shape_err!(
                "features have {} dimensions, model expects {}",
                frames.cols(),
                self.config.input_dim
            ));
        }
        let mut caches: Vec<LstmCache> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = caches.last().map_or(frames, |c| c.hidden_states());
            let cache = layer.forward(input)?;
            caches.push(cache);
        }
        let top = caches.last().expect("at least one layer").hidden_states();
        let pooled = global_mean_pool_forward(top)?;
        let (h, hidden_cache) = self.hidden.forward(&pooled)?;
        let (dropped, dropout_mask) = dropout(&h, self.config.dropout_prob, mode, rng)?;
        let (logits, output_cache) = self.output.forward(&dropped)?;
        let posteriors = softmax(&logits);
        Ok(AcousticForward {
            pooled,
            logits,
            posteriors,
            caches,
            hidden_cache,
            dropout_mask,
            output_cache,
        })
    }

    /// Accumulates gradients given `dLoss/d logits`.
    pub fn backward(&mut self, fwd: &AcousticForward, d_logits: &[f64]) -> Result<()> {
        let d_dropped = self.output.backward(&fwd.output_cache, d_logits)?;
        let d_h: Vec<f64> = d_dropped.iter().zip(&fwd.dropout_mask).map(|(d, m)| d * m).collect();
        let d_pooled = self.hidden.backward(&fwd.hidden_cache, &d_h)?;
        let t_len = fwd.caches[0].hidden_states().rows();
        let mut upstream = global_mean_pool_backward(t_len, &d_pooled)?;
        for (layer, cache) in self.layers.iter_mut().zip(&fwd.caches).rev() {
            upstream = layer.backward(cache, &upstream)?;
        }
        Ok(())
    }

    pub fn parameters_mut(&mut self) -> Vec<(String, &mut Parameter)> {
        let mut out: Vec<(String, &mut Parameter)> = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let [w, u, b] = layer.params_mut();
            out.push((alloc::format!("lstm{}.w_input", i), w));
            out.push((alloc::format!("lstm{}.w_recurrent", i), u));
            out.push((alloc::format!("lstm{}.bias", i), b));
        }
        out.push(("hidden.weight".into(), &mut self.hidden.weight));
        out.push(("hidden.bias".into(), &mut self.hidden.bias));
        out.push(("output.weight".into(), &mut self.output.weight));
        out.push(("output.bias".into(), &mut self.output.bias));
        out
    }

    pub fn parameters(&self) -> Vec<(String, &Parameter)> {
        let mut out: Vec<(String, &Parameter)> = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let [w, u, b] = layer.params();
            out.push((alloc::format!("lstm{}.w_input", i), w));
            out.push((alloc::format!("lstm{}.w_recurrent", i), u));
            out.push((alloc::format!("lstm{}.bias", i), b));
        }
        out.push(("hidden.weight".into(), &self.hidden.weight));
        out.push(("hidden.bias".into(), &self.hidden.bias));
        out.push(("output.weight".into(), &self.output.weight));
        out.push(("output.bias".into(), &self.output.bias));
        out
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.parameters_mut() {
            p.zero_grad();
        }
    }

    pub fn step(&mut self, adam: &AdamConfig) {
        for (_, p) in self.parameters_mut() {
            adam_update(p, adam);
        }
    }
}

/// Mean of raw frames with no recurrence; a diagnostic for the pooling stage.
pub fn raw_frame_pool(frames: &Matrix) -> Result<Vec<f64>> {
    global_mean_pool_forward(frames)
}

/// Per-dimension z-scoring with statistics from training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNormalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureNormalizer {
    /// Pools all frames of the given sequences. Dimensions with zero variance
    /// get unit scale.
    pub fn fit<'a, I>(sequences: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Matrix>,
    {
        let mut dim = None;
        let mut count = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sum_sq: Vec<f64> = Vec::new();
        for seq in sequences {
            let d = *dim.get_or_insert(seq.cols());
            if seq.cols() != d {
                return Err(shape_err!("feature dimension {} vs {}", seq.cols(), d));
            }
            if sum.is_empty() {
                sum = vec![0.0; d];
                sum_sq = vec![0.0; d];
            }
            for t in 0..seq.rows() {
                for (j, &v) in seq.row(t).iter().enumerate() {
                    sum[j] += v;
                    sum_sq[j] += v * v;
                }
            }
            count += seq.rows();
        }
        if count == 0 {
            return Err(Error::EmptySequence("no frames to fit normalization".into()));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let var = (sq / n - m * m).max(0.0);
                let s = libm::sqrt(var);
                if s > 1e-8 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, frames: &Matrix) -> Result<Matrix> {
        if frames.cols() != self.mean.len() {
            return Err(shape_err!(
                "normalizer for {} dimensions applied to {}",
                self.mean.len(),
                frames.cols()
            ));
        }
        let mut out = frames.clone();
        for t in 0..out.rows() {
            for ((v, m), s) in out.row_mut(t).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}
