//! Self-describing JSON checkpoints: model kind, resolved config, the
//! preprocessing state needed at inference, and every parameter block with
//! its shape. Floats are written in round-trip form so a save/load cycle is
//! bit-exact.

use std::path::Path;

use emofuse_core::acoustic::{FeatureNormalizer, LstmConfig, LstmModel};
use emofuse_core::text::{McnnConfig, McnnModel, Vocabulary};
use emofuse_core::{Matrix, Parameter, Rng};
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextConfigRecord {
    pub kernel_sizes: Vec<usize>,
    pub embed_dim: usize,
    pub filters_per_module: usize,
    pub num_classes: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticConfigRecord {
    pub input_dim: usize,
    pub num_lstm_layers: usize,
    pub units_per_layer: usize,
    pub dense_units: usize,
    pub num_classes: usize,
    pub dropout_prob: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Mcnn {
        config: TextConfigRecord,
        vocabulary: Vec<String>,
        blocks: Vec<Block>,
    },
    Lstm {
        config: AcousticConfigRecord,
        feature_mean: Vec<f64>,
        feature_std: Vec<f64>,
        blocks: Vec<Block>,
    },
}

fn blocks_of<'a>(params: impl IntoIterator<Item = (String, &'a Parameter)>) -> Vec<Block> {
    params
        .into_iter()
        .map(|(name, p)| Block {
            name,
            rows: p.value.rows(),
            cols: p.value.cols(),
            values: p.value.values().to_vec(),
        })
        .collect()
}

fn restore<'a>(target: Vec<(String, &'a mut Parameter)>, blocks: &[Block]) -> Result<()> {
    if target.len() != blocks.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} parameter blocks, model needs {}",
            blocks.len(),
            target.len()
        )));
    }
    for ((name, p), b) in target.into_iter().zip(blocks) {
        if name != b.name || p.value.shape() != (b.rows, b.cols) {
            return Err(Error::Format(format!(
                "checkpoint block {} {}x{} does not match model block {} {:?}",
                b.name,
                b.rows,
                b.cols,
                name,
                p.value.shape()
            )));
        }
        *p = Parameter::new(Matrix::from_vec(b.rows, b.cols, b.values.clone())?);
    }
    Ok(())
}

impl From<&McnnConfig> for TextConfigRecord {
    fn from(c: &McnnConfig) -> Self {
        Self {
            kernel_sizes: c.kernel_sizes.clone(),
            embed_dim: c.embed_dim,
            filters_per_module: c.filters_per_module,
            num_classes: c.num_classes,
            lambda: c.lambda,
        }
    }
}

impl From<&TextConfigRecord> for McnnConfig {
    fn from(c: &TextConfigRecord) -> Self {
        Self {
            kernel_sizes: c.kernel_sizes.clone(),
            embed_dim: c.embed_dim,
            filters_per_module: c.filters_per_module,
            num_classes: c.num_classes,
            lambda: c.lambda,
        }
    }
}

impl From<&LstmConfig> for AcousticConfigRecord {
    fn from(c: &LstmConfig) -> Self {
        Self {
            input_dim: c.input_dim,
            num_lstm_layers: c.num_lstm_layers,
            units_per_layer: c.units_per_layer,
            dense_units: c.dense_units,
            num_classes: c.num_classes,
            dropout_prob: c.dropout_prob,
            batch_size: c.batch_size,
        }
    }
}

impl From<&AcousticConfigRecord> for LstmConfig {
    fn from(c: &AcousticConfigRecord) -> Self {
        Self {
            input_dim: c.input_dim,
            num_lstm_layers: c.num_lstm_layers,
            units_per_layer: c.units_per_layer,
            dense_units: c.dense_units,
            num_classes: c.num_classes,
            dropout_prob: c.dropout_prob,
            batch_size: c.batch_size,
        }
    }
}

impl Checkpoint {
    pub fn from_mcnn(model: &McnnModel, vocab: &Vocabulary) -> Self {
        Checkpoint::Mcnn {
            config: (&model.config).into(),
            vocabulary: vocab.tokens().to_vec(),
            blocks: blocks_of(model.parameters()),
        }
    }

    pub fn from_lstm(model: &LstmModel, normalizer: &FeatureNormalizer) -> Self {
        Checkpoint::Lstm {
            config: (&model.config).into(),
            feature_mean: normalizer.mean.clone(),
            feature_std: normalizer.std.clone(),
            blocks: blocks_of(model.parameters()),
        }
    }

    pub fn to_mcnn(&self) -> Result<(McnnModel, Vocabulary)> {
        let Checkpoint::Mcnn {
            config,
            vocabulary,
            blocks,
        } = self
        else {
            return Err(Error::Format("checkpoint does not hold an MCNN".into()));
        };
        let vocab = Vocabulary::from_tokens(vocabulary.clone())?;
        let mut model = McnnModel::new(config.into(), vocab.len(), &mut Rng::new(0))?;
        restore(model.parameters_mut(), blocks)?;
        Ok((model, vocab))
    }

    pub fn to_lstm(&self) -> Result<(LstmModel, FeatureNormalizer)> {
        let Checkpoint::Lstm {
            config,
            feature_mean,
            feature_std,
            blocks,
        } = self
        else {
            return Err(Error::Format("checkpoint does not hold an LSTM".into()));
        };
        let mut model = LstmModel::new(config.into(), &mut Rng::new(0))?;
        restore(model.parameters_mut(), blocks)?;
        let normalizer = FeatureNormalizer {
            mean: feature_mean.clone(),
            std: feature_std.clone(),
        };
        Ok((model, normalizer))
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string(self).expect("finite parameters serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        error::write(path, self.render())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = error::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}
