use alloc::vec;
use alloc::vec::Vec;

use super::tokenize::PaddedTokens;
use crate::error::{Error, Result};
use crate::layers::{softmax, Activation, Conv1d, Dense, Embedding};
use crate::matrix::Matrix;
use crate::param::Parameter;
use crate::rng::Rng;

pub const EMBED_INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPreset {
    /// Four modules, kernel sizes 1, 4, 7, 11.
    Iemocap,
    /// Three modules with increment 1: kernel sizes 1, 2, 3.
    Callcenter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelSpec {
    Preset(KernelPreset),
    Explicit(Vec<usize>),
}

/// Resolves a preset or validates an explicit list of kernel sizes.
pub fn kernel_schedule(spec: &KernelSpec) -> Result<Vec<usize>> {
    match spec {
        KernelSpec::Preset(KernelPreset::Iemocap) => Ok(vec![1, 4, 7, 11]),
        KernelSpec::Preset(KernelPreset::Callcenter) => Ok(vec![1, 2, 3]),
        KernelSpec::Explicit(sizes) => {
            validate_kernels(sizes)?;
            Ok(sizes.clone())
        }
    }
}

fn validate_kernels(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Config("at least one kernel size required".into()));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(alloc::format!(
            "kernel sizes must be positive and strictly increasing, got {:?}",
            sizes
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct McnnConfig {
    pub kernel_sizes: Vec<usize>,
    pub embed_dim: usize,
    pub filters_per_module: usize,
    pub num_classes: usize,
    /// Weight of the verification term in the training objective.
    pub lambda: f64,
}

impl McnnConfig {
    pub fn preset(preset: KernelPreset) -> Self {
        let (num_classes, lambda) = match preset {
            KernelPreset::Iemocap => (4, 0.10),
            KernelPreset::Callcenter => (3, 0.15),
        };
        Self {
            kernel_sizes: kernel_schedule(&KernelSpec::Preset(preset)).expect("presets are valid"),
            embed_dim: 50,
            filters_per_module: 64,
            num_classes,
            lambda,
        }
    }

    pub fn num_modules(&self) -> usize {
        self.kernel_sizes.len()
    }

    pub fn max_kernel(&self) -> usize {
        self.kernel_sizes.last().copied().unwrap_or(1)
    }

    pub fn embedding_dim(&self) -> usize {
        self.num_modules() * self.filters_per_module
    }

    pub fn validate(&self) -> Result<()> {
        validate_kernels(&self.kernel_sizes)?;
        if self.embed_dim == 0 || self.filters_per_module == 0 {
            return Err(Error::Config("embedding and filter counts must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Config("at least two classes required".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(alloc::format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Multi-resolution CNN: parallel convolution modules of increasing kernel
/// size over word embeddings, each relu-activated and mean-pooled, then
/// concatenated and classified with a softmax layer.
#[derive(Debug, Clone, PartialEq)]
pub struct McnnModel {
    pub config: McnnConfig,
    pub embedding: Embedding,
    pub modules: Vec<Conv1d>,
    pub output: Dense,
}

/// Result of one forward pass plus the state its backward pass needs.
#[derive(Debug, Clone)]
pub struct McnnForward {
    /// Concatenated utterance embedding, `N·F` entries.
    pub embedding: Vec<f64>,
    pub logits: Vec<f64>,
    pub posteriors: Vec<f64>,
    tokens: PaddedTokens,
    embedded: Matrix,
    activations: Vec<Matrix>,
    pooled_counts: Vec<usize>,
}

impl McnnModel {
    pub fn new(config: McnnConfig, vocab_size: usize, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        if vocab_size < 2 {
            return Err(Error::Config("vocabulary needs the two reserved entries".into()));
        }
        let embedding = Embedding::new(vocab_size, config.embed_dim, EMBED_INIT_SCALE, rng);
        let conv_scale = 1.0 / libm::sqrt(config.embed_dim as f64);
        let modules = config
            .kernel_sizes
            .iter()
            .map(|&k| Conv1d::new(k, config.embed_dim, config.filters_per_module, conv_scale / libm::sqrt(k as f64), rng))
            .collect();
        let out_scale = 1.0 / libm::sqrt(config.embedding_dim() as f64);
        let output = Dense::new(config.embedding_dim(), config.num_classes, Activation::Linear, out_scale, rng);
        Ok(Self {
            config,
            embedding,
            modules,
            output,
        })
    }

    /// Number of conv positions averaged for a module of kernel `k`.
    ///
    /// Windows overlapping padding are excluded. An utterance shorter than the
    /// kernel keeps its single leading window so every real token is seen.
    fn pooled_count(real_len: usize, k: usize) -> usize {
        if real_len >= k {
            real_len - k + 1
        } else {
            1
        }
    }

    pub fn forward(&self, tokens: &PaddedTokens) -> Result<McnnForward> {
        let k = self.config.num_classes;
        let emb_dim = self.config.embedding_dim();
        if tokens.len() < self.config.max_kernel() {
            return Err(Error::Precondition(alloc::format!(
                "{} token slots, need at least {} (pad first)",
                tokens.len(),
                self.config.max_kernel()
            )));
        }
        let embedded = self.embedding.lookup(&tokens.indices)?;
        if tokens.is_all_padding() {
            return Ok(McnnForward {
                embedding: vec![0.0; emb_dim],
                logits: vec![0.0; k],
                posteriors: vec![1.0 / k as f64; k],
                tokens: tokens.clone(),
                embedded,
                activations: Vec::new(),
                pooled_counts: Vec::new(),
            });
        }
        let mut embedding = Vec::with_capacity(emb_dim);
        let mut activations = Vec::with_capacity(self.modules.len());
        let mut pooled_counts = Vec::with_capacity(self.modules.len());
        for module in &self.modules {
            let mut act = module.forward(&embedded)?;
            act.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            let count = Self::pooled_count(tokens.real_len, module.kernel_size);
            embedding.extend(crate::layers::pool::mean_of_first_rows(&act, count)?);
            activations.push(act);
            pooled_counts.push(count);
        }
        let (logits, _) = self.output.forward(&embedding)?;
        let posteriors = softmax(&logits);
        Ok(McnnForward {
            embedding,
            logits,
            posteriors,
            tokens: tokens.clone(),
            embedded,
            activations,
            pooled_counts,
        })
    }

    /// Accumulates gradients given `dLoss/d embedding` (from the verification
    /// term) and `dLoss/d logits`.
    pub fn backward(&mut self, fwd: &McnnForward, d_embedding: &[f64], d_logits: &[f64]) -> Result<()> {
        if fwd.tokens.is_all_padding() {
            return Ok(());
        }
        let emb_dim = self.config.embedding_dim();
        if d_embedding.len() != emb_dim || d_logits.len() != self.config.num_classes {
            return Err(crate::error::shape_err!(
                "backward with {} embedding / {} logit gradients",
                d_embedding.len(),
                d_logits.len()
            ));
        }
        let cache = crate::layers::DenseCache {
            input: fwd.embedding.clone(),
            output: fwd.logits.clone(),
        };
        let mut d_emb = self.output.backward(&cache, d_logits)?;
        for (d, &v) in d_emb.iter_mut().zip(d_embedding) {
            *d += v;
        }
        let f = self.config.filters_per_module;
        let mut d_embedded = Matrix::zeros(fwd.embedded.rows(), fwd.embedded.cols());
        for (m, module) in self.modules.iter_mut().enumerate() {
            let act = &fwd.activations[m];
            let count = fwd.pooled_counts[m];
            let seg = &d_emb[m * f..(m + 1) * f];
            let mut upstream = Matrix::zeros(act.rows(), f);
            let scale = 1.0 / count as f64;
            for t in 0..count {
                for ((u, &a), &s) in upstream.row_mut(t).iter_mut().zip(act.row(t)).zip(seg) {
                    if a > 0.0 {
                        *u = s * scale;
                    }
                }
            }
            let dx = module.backward(&fwd.embedded, &upstream)?;
            d_embedded.add_scaled(&dx, 1.0)?;
        }
        self.embedding.backward(&fwd.tokens.indices, &d_embedded)
    }

    /// Every trainable block in a fixed order.
    pub fn parameters_mut(&mut self) -> Vec<(alloc::string::String, &mut Parameter)> {
        let mut out: Vec<(alloc::string::String, &mut Parameter)> = Vec::new();
        out.push(("embedding".into(), &mut self.embedding.table));
        for (m, module) in self.modules.iter_mut().enumerate() {
            out.push((alloc::format!("module{}.weight", m), &mut module.weight));
            out.push((alloc::format!("module{}.bias", m), &mut module.bias));
        }
        out.push(("output.weight".into(), &mut self.output.weight));
        out.push(("output.bias".into(), &mut self.output.bias));
        out
    }

    pub fn parameters(&self) -> Vec<(alloc::string::String, &Parameter)> {
        let mut out: Vec<(alloc::string::String, &Parameter)> = Vec::new();
        out.push(("embedding".into(), &self.embedding.table));
        for (m, module) in self.modules.iter().enumerate() {
            out.push((alloc::format!("module{}.weight", m), &module.weight));
            out.push((alloc::format!("module{}.bias", m), &module.bias));
        }
        out.push(("output.weight".into(), &self.output.weight));
        out.push(("output.bias".into(), &self.output.bias));
        out
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Adam step on every block; the padding row stays at zero.
    pub fn step(&mut self, adam: &crate::param::AdamConfig) {
        self.embedding.clamp_padding();
        for (_, p) in self.parameters_mut() {
            crate::param::adam_update(p, adam);
        }
        self.embedding.clamp_padding();
    }
}
