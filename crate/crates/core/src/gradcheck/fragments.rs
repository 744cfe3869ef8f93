//! Ready-made [`Differentiable`] fragments covering every layer and both
//! full branches, each built from a seed with randomized small shapes.
//!
//! Layer fragments score their output with a fixed random linear functional,
//! so the upstream gradient is that functional's coefficients.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::Differentiable;
use crate::acoustic::{AcousticExample, LstmConfig, LstmModel};
use crate::error::Result;
use crate::layers::pool::global_mean_pool_backward;
use crate::layers::{
    dropout, global_mean_pool_forward, softmax_cross_entropy, Activation, Conv1d, Dense, DropoutMode, Embedding, Lstm,
};
use crate::matrix::Matrix;
use crate::math::dot;
use crate::param::Parameter;
use crate::rng::Rng;
use crate::text::{pad_tokens, McnnConfig, McnnModel};
use crate::training::{text_batch_step, TextExample};

fn size(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    lo + rng.below(hi - lo + 1)
}

fn functional(len: usize, rng: &mut Rng) -> Vec<f64> {
    (0..len).map(|_| rng.uniform_in(-1.0, 1.0)).collect()
}

pub struct EmbeddingFragment {
    pub embedding: Embedding,
    pub indices: Vec<usize>,
    weights: Matrix,
}

impl EmbeddingFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let (v, e, t) = (size(&mut rng, 3, 8), size(&mut rng, 1, 5), size(&mut rng, 1, 7));
        let embedding = Embedding::new(v, e, 1.0, &mut rng);
        let indices = (0..t).map(|_| rng.below(v)).collect();
        let weights = Matrix::uniform(t, e, 1.0, &mut rng);
        Self {
            embedding,
            indices,
            weights,
        }
    }
}

impl Differentiable for EmbeddingFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        vec![("table".into(), &mut self.embedding.table)]
    }

    fn loss(&self) -> Result<f64> {
        Ok(dot(self.embedding.lookup(&self.indices)?.values(), self.weights.values()))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.embedding.table.zero_grad();
        self.embedding.backward(&self.indices, &self.weights)?;
        self.loss()
    }

    fn is_frozen(&self, _block: usize, index: usize) -> bool {
        index < self.embedding.dim()
    }
}

pub struct Conv1dFragment {
    pub input: Parameter,
    pub conv: Conv1d,
    weights: Matrix,
}

impl Conv1dFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let k = size(&mut rng, 1, 4);
        let (t, e, f) = (size(&mut rng, k, k + 4), size(&mut rng, 1, 4), size(&mut rng, 1, 3));
        let input = Parameter::new(Matrix::uniform(t, e, 1.0, &mut rng));
        let mut conv = Conv1d::new(k, e, f, 1.0, &mut rng);
        conv.bias.value = Matrix::uniform(1, f, 1.0, &mut rng);
        let weights = Matrix::uniform(t - k + 1, f, 1.0, &mut rng);
        Self { input, conv, weights }
    }
}

impl Differentiable for Conv1dFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        vec![
            ("input".into(), &mut self.input),
            ("weight".into(), &mut self.conv.weight),
            ("bias".into(), &mut self.conv.bias),
        ]
    }

    fn loss(&self) -> Result<f64> {
        Ok(dot(self.conv.forward(&self.input.value)?.values(), self.weights.values()))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.input.zero_grad();
        self.conv.weight.zero_grad();
        self.conv.bias.zero_grad();
        let dx = self.conv.backward(&self.input.value, &self.weights)?;
        self.input.grad = dx;
        self.loss()
    }
}

pub struct PoolFragment {
    pub input: Parameter,
    weights: Vec<f64>,
}

impl PoolFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let (t, h) = (size(&mut rng, 1, 9), size(&mut rng, 1, 5));
        Self {
            input: Parameter::new(Matrix::uniform(t, h, 1.0, &mut rng)),
            weights: functional(h, &mut rng),
        }
    }
}

impl Differentiable for PoolFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        vec![("input".into(), &mut self.input)]
    }

    fn loss(&self) -> Result<f64> {
        Ok(dot(&global_mean_pool_forward(&self.input.value)?, &self.weights))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.input.grad = global_mean_pool_backward(self.input.value.rows(), &self.weights)?;
        self.loss()
    }
}

pub struct DenseFragment {
    pub input: Parameter,
    pub layer: Dense,
    weights: Vec<f64>,
}

impl DenseFragment {
    pub fn random(seed: u64, activation: Activation) -> Self {
        let mut rng = Rng::new(seed);
        let (i, o) = (size(&mut rng, 1, 6), size(&mut rng, 1, 5));
        let mut layer = Dense::new(i, o, activation, 1.0, &mut rng);
        layer.bias.value = Matrix::uniform(1, o, 0.5, &mut rng);
        Self {
            input: Parameter::new(Matrix::uniform(1, i, 1.0, &mut rng)),
            layer,
            weights: functional(o, &mut rng),
        }
    }
}

impl Differentiable for DenseFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        vec![
            ("input".into(), &mut self.input),
            ("weight".into(), &mut self.layer.weight),
            ("bias".into(), &mut self.layer.bias),
        ]
    }

    fn loss(&self) -> Result<f64> {
        Ok(dot(&self.layer.forward(self.input.value.values())?.0, &self.weights))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.layer.weight.zero_grad();
        self.layer.bias.zero_grad();
        let (_, cache) = self.layer.forward(self.input.value.values())?;
        let dx = self.layer.backward(&cache, &self.weights)?;
        self.input.grad = Matrix::from_vec(1, dx.len(), dx)?;
        self.loss()
    }
}

pub struct LstmFragment {
    pub input: Parameter,
    pub lstm: Lstm,
    weights: Matrix,
}

impl LstmFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let (t, d, h) = (size(&mut rng, 1, 6), size(&mut rng, 1, 4), size(&mut rng, 1, 4));
        let mut lstm = Lstm::new(d, h, 0.8, &mut rng);
        lstm.bias.value = Matrix::uniform(1, 4 * h, 0.5, &mut rng);
        Self {
            input: Parameter::new(Matrix::uniform(t, d, 1.0, &mut rng)),
            lstm,
            weights: Matrix::uniform(t, h, 1.0, &mut rng),
        }
    }
}

impl Differentiable for LstmFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        let [w, u, b] = self.lstm.params_mut();
        vec![
            ("input".into(), &mut self.input),
            ("w_input".into(), w),
            ("w_recurrent".into(), u),
            ("bias".into(), b),
        ]
    }

    fn loss(&self) -> Result<f64> {
        let cache = self.lstm.forward(&self.input.value)?;
        Ok(dot(cache.hidden_states().values(), self.weights.values()))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        for p in self.lstm.params_mut() {
            p.zero_grad();
        }
        let cache = self.lstm.forward(&self.input.value)?;
        self.input.grad = self.lstm.backward(&cache, &self.weights)?;
        self.loss()
    }
}

pub struct SoftmaxCeFragment {
    pub logits: Parameter,
    pub class: usize,
}

impl SoftmaxCeFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let k = size(&mut rng, 2, 7);
        Self {
            logits: Parameter::new(Matrix::uniform(1, k, 3.0, &mut rng)),
            class: rng.below(k),
        }
    }
}

impl Differentiable for SoftmaxCeFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        vec![("logits".into(), &mut self.logits)]
    }

    fn loss(&self) -> Result<f64> {
        Ok(softmax_cross_entropy(self.logits.value.values(), self.class)?.loss)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        let ce = softmax_cross_entropy(self.logits.value.values(), self.class)?;
        self.logits.grad = Matrix::from_vec(1, ce.grad.len(), ce.grad)?;
        Ok(ce.loss)
    }
}

/// Dropout in train mode; the mask is redrawn from the same seed on every
/// evaluation so the loss is a deterministic function of the input.
pub struct DropoutFragment {
    pub input: Parameter,
    drop_prob: f64,
    mask_seed: u64,
    weights: Vec<f64>,
}

impl DropoutFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let n = size(&mut rng, 2, 10);
        Self {
            input: Parameter::new(Matrix::uniform(1, n, 1.0, &mut rng)),
            drop_prob: rng.uniform_in(0.1, 0.7),
            mask_seed: seed ^ 0xD0,
            weights: functional(n, &mut rng),
        }
    }

    fn apply(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        dropout(
            self.input.value.values(),
            self.drop_prob,
            DropoutMode::Train,
            &mut Rng::new(self.mask_seed),
        )
    }
}

impl Differentiable for DropoutFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        vec![("input".into(), &mut self.input)]
    }

    fn loss(&self) -> Result<f64> {
        Ok(dot(&self.apply()?.0, &self.weights))
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        let (_, mask) = self.apply()?;
        let g: Vec<f64> = mask.iter().zip(&self.weights).map(|(m, w)| m * w).collect();
        self.input.grad = Matrix::from_vec(1, g.len(), g)?;
        self.loss()
    }
}

/// Full MCNN under the combined objective on one mini-batch, including
/// utterances shorter than the largest kernel and an all-padding one.
pub struct McnnObjectiveFragment {
    pub model: McnnModel,
    pub batch: Vec<TextExample>,
}

impl McnnObjectiveFragment {
    pub fn random(seed: u64, lambda: f64) -> Self {
        let mut rng = Rng::new(seed);
        let n_mod = size(&mut rng, 1, 3);
        let mut kernels = Vec::with_capacity(n_mod);
        let mut k = 0;
        for _ in 0..n_mod {
            k += size(&mut rng, 1, 2);
            kernels.push(k);
        }
        let config = McnnConfig {
            kernel_sizes: kernels,
            embed_dim: size(&mut rng, 2, 4),
            filters_per_module: size(&mut rng, 1, 3),
            num_classes: size(&mut rng, 2, 4),
            lambda,
        };
        let vocab = size(&mut rng, 4, 9);
        let mut model = McnnModel::new(config, vocab, &mut rng).expect("valid random config");
        // Larger weights keep relu units away from their kink at this scale.
        model.embedding.table.value = Matrix::uniform(vocab, model.config.embed_dim, 1.0, &mut rng);
        model.embedding.clamp_padding();
        for m in &mut model.modules {
            m.bias.value = Matrix::uniform(1, m.filters(), 0.3, &mut rng);
        }
        let members = size(&mut rng, 2, 5);
        let max_k = model.config.max_kernel();
        let mut batch: Vec<TextExample> = (0..members)
            .map(|_| {
                let len = size(&mut rng, 1, max_k + 3);
                let idx: Vec<usize> = (0..len).map(|_| 1 + rng.below(vocab - 1)).collect();
                TextExample {
                    tokens: pad_tokens(&idx, max_k),
                    label: rng.below(model.config.num_classes),
                }
            })
            .collect();
        if seed % 4 == 0 {
            batch.push(TextExample {
                tokens: pad_tokens(&[], max_k),
                label: 0,
            });
        }
        Self { model, batch }
    }
}

impl Differentiable for McnnObjectiveFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        self.model.parameters_mut()
    }

    fn loss(&self) -> Result<f64> {
        let mut probe = self.model.clone();
        let idx: Vec<usize> = (0..self.batch.len()).collect();
        text_batch_step(&mut probe, &self.batch, &idx).map(|(c, _)| c)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.model.zero_grad();
        let idx: Vec<usize> = (0..self.batch.len()).collect();
        text_batch_step(&mut self.model, &self.batch, &idx).map(|(c, _)| c)
    }

    fn is_frozen(&self, block: usize, index: usize) -> bool {
        block == 0 && index < self.model.config.embed_dim
    }
}

/// Whole acoustic branch (LSTM stack, pooling, dense + dropout, softmax)
/// under summed cross-entropy over a few sequences.
pub struct AcousticFragment {
    pub model: LstmModel,
    pub examples: Vec<AcousticExample>,
    mask_seed: u64,
}

impl AcousticFragment {
    pub fn random(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let config = LstmConfig {
            input_dim: size(&mut rng, 1, 3),
            num_lstm_layers: size(&mut rng, 1, 2),
            units_per_layer: size(&mut rng, 1, 3),
            dense_units: size(&mut rng, 1, 4),
            num_classes: size(&mut rng, 2, 3),
            dropout_prob: if seed % 2 == 0 { 0.0 } else { 0.3 },
            batch_size: 2,
        };
        let mut model = LstmModel::new(config, &mut rng).expect("valid random config");
        for (_, p) in model.parameters_mut() {
            let (r, c) = p.shape();
            p.value = Matrix::uniform(r, c, 0.8, &mut rng);
        }
        let examples = (0..size(&mut rng, 1, 3))
            .map(|_| AcousticExample {
                frames: Matrix::uniform(size(&mut rng, 1, 5), model.config.input_dim, 1.0, &mut rng),
                label: rng.below(model.config.num_classes),
            })
            .collect();
        Self {
            model,
            examples,
            mask_seed: seed,
        }
    }

    fn run(&self, model: &mut LstmModel, accumulate: bool) -> Result<f64> {
        let mut rng = Rng::new(self.mask_seed);
        let mut total = 0.0;
        for ex in &self.examples {
            let fwd = model.forward(&ex.frames, DropoutMode::Train, &mut rng)?;
            let ce = softmax_cross_entropy(&fwd.logits, ex.label)?;
            total += ce.loss;
            if accumulate {
                model.backward(&fwd, &ce.grad)?;
            }
        }
        Ok(total)
    }
}

impl Differentiable for AcousticFragment {
    fn blocks(&mut self) -> Vec<(String, &mut Parameter)> {
        self.model.parameters_mut()
    }

    fn loss(&self) -> Result<f64> {
        let mut probe = self.model.clone();
        self.run(&mut probe, false)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.model.zero_grad();
        let mut model = self.model.clone();
        let loss = self.run(&mut model, true);
        self.model = model;
        loss
    }
}

/// Every fragment kind for one seed, labelled.
pub fn all_fragments(seed: u64) -> Vec<(&'static str, Box<dyn Differentiable>)> {
    vec![
        ("embedding", Box::new(EmbeddingFragment::random(seed)) as Box<dyn Differentiable>),
        ("conv1d", Box::new(Conv1dFragment::random(seed))),
        ("mean-pool", Box::new(PoolFragment::random(seed))),
        ("dense-linear", Box::new(DenseFragment::random(seed, Activation::Linear))),
        ("dense-relu", Box::new(DenseFragment::random(seed, Activation::Relu))),
        ("dense-tanh", Box::new(DenseFragment::random(seed, Activation::Tanh))),
        ("lstm", Box::new(LstmFragment::random(seed))),
        ("dropout", Box::new(DropoutFragment::random(seed))),
        ("softmax-ce", Box::new(SoftmaxCeFragment::random(seed))),
        ("mcnn-objective", Box::new(McnnObjectiveFragment::random(seed, 0.15))),
        ("acoustic-branch", Box::new(AcousticFragment::random(seed))),
    ]
}
