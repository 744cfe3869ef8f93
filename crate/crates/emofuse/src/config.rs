//! Run configuration (TOML). Presets fill in architecture sizes; anything
//! set explicitly overrides them. [`RunConfig::resolve`] checks everything
//! and returns the fully resolved configuration that is echoed next to the
//! outputs.

use std::path::{Path, PathBuf};

use emofuse_core::acoustic::{AcousticPreset, LstmConfig};
use emofuse_core::fusion::Combination;
use emofuse_core::svm::SvmConfig;
use emofuse_core::text::{KernelPreset, McnnConfig};
use emofuse_core::training::{TrainConfig, LAMBDA_GRID};
use emofuse_core::AdamConfig;
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};
use crate::synth::SynthSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Iemocap,
    Callcenter,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub manifest: Option<PathBuf>,
    pub synth: Option<SynthSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextSection {
    pub lambda_grid: Option<Vec<f64>>,
    pub kernel_sizes: Option<Vec<usize>>,
    pub embed_dim: Option<usize>,
    pub filters_per_module: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticSection {
    pub num_lstm_layers: Option<usize>,
    pub units_per_layer: Option<usize>,
    pub dense_units: Option<usize>,
    pub dropout_prob: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvectorSection {
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    /// Output directories of earlier train-* runs.
    #[serde(default)]
    pub systems: Vec<PathBuf>,
    #[serde(default)]
    pub combinations: Vec<String>,
    pub reg_constant: Option<f64>,
    pub epochs: Option<usize>,
    pub eta0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub max_modules: Option<usize>,
    pub kernel_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub preset: Option<Preset>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub balance_classes: bool,
    pub report_wa: Option<bool>,
    pub corpus: Option<CorpusSource>,
    #[serde(default)]
    pub text: TextSection,
    #[serde(default)]
    pub acoustic: AcousticSection,
    #[serde(default)]
    pub evector: EvectorSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub combinations: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ResolvedCorpus {
    #[serde(rename = "manifest")]
    Manifest(PathBuf),
    #[serde(rename = "synth")]
    Synth(SynthSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedTrain {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedText {
    pub lambda_grid: Vec<f64>,
    pub kernel_sizes: Vec<usize>,
    pub embed_dim: usize,
    pub filters_per_module: usize,
    pub train: ResolvedTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedAcoustic {
    pub num_lstm_layers: usize,
    pub units_per_layer: usize,
    pub dense_units: usize,
    pub dropout_prob: f64,
    pub train: ResolvedTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedFusion {
    pub systems: Vec<PathBuf>,
    pub combinations: Vec<String>,
    pub reg_constant: f64,
    pub epochs: usize,
    pub eta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSweep {
    pub max_modules: usize,
    pub kernel_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub folds: usize,
    pub preset: Preset,
    /// Not echoed: the echo lives inside this directory.
    #[serde(skip)]
    pub out: PathBuf,
    pub balance_classes: bool,
    pub report_wa: bool,
    pub corpus: Option<ResolvedCorpus>,
    pub text: ResolvedText,
    pub acoustic: ResolvedAcoustic,
    pub evector_alpha: f64,
    pub fusion: ResolvedFusion,
    pub sweep: ResolvedSweep,
}

const DEFAULT_FOLDS: usize = 5;
const DEFAULT_SWEEP_MODULES: usize = 6;

/// Kernel sizes 1, 4, 7, ... used by the module sweep unless given.
pub fn default_sweep_kernels(n: usize) -> Vec<usize> {
    (0..n).map(|i| 1 + 3 * i).collect()
}

fn resolve_train(
    epochs: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    default_batch: usize,
) -> Result<ResolvedTrain> {
    let r = ResolvedTrain {
        epochs: epochs.unwrap_or(30),
        batch_size: batch_size.unwrap_or(default_batch),
        learning_rate: learning_rate.unwrap_or(AdamConfig::default().lr),
    };
    r.to_core().validate()?;
    Ok(r)
}

impl ResolvedTrain {
    pub fn to_core(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }
}

impl Preset {
    fn kernels(self) -> KernelPreset {
        match self {
            Preset::Iemocap => KernelPreset::Iemocap,
            Preset::Callcenter => KernelPreset::Callcenter,
        }
    }

    fn acoustic(self) -> AcousticPreset {
        match self {
            Preset::Iemocap => AcousticPreset::Iemocap,
            Preset::Callcenter => AcousticPreset::Callcenter,
        }
    }
}

fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config: {}", e.message())))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&error::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(CorpusSource {
            manifest: Some(m), ..
        }) = cfg.corpus.as_mut()
        {
            *m = relative_to(base, m);
        }
        for s in &mut cfg.fusion.systems {
            *s = relative_to(base, s);
        }
        if let Some(o) = cfg.out.as_mut() {
            *o = relative_to(base, o);
        }
        Ok(cfg)
    }

    pub fn resolve(&self, over: &Overrides) -> Result<Resolved> {
        let preset = over.preset.or(self.preset).unwrap_or(Preset::Iemocap);
        let out = over
            .out
            .clone()
            .or_else(|| self.out.clone())
            .ok_or_else(|| Error::config("no output directory (set `out` or pass --out)"))?;
        let folds = self.folds.unwrap_or(DEFAULT_FOLDS);
        if folds < 3 {
            return Err(Error::config("folds must be at least 3 (test, validation and training folds)"));
        }
        let corpus = match &self.corpus {
            None => None,
            Some(CorpusSource {
                manifest: Some(m),
                synth: None,
            }) => Some(ResolvedCorpus::Manifest(m.clone())),
            Some(CorpusSource {
                manifest: None,
                synth: Some(s),
            }) => {
                s.validate()?;
                Some(ResolvedCorpus::Synth(s.clone()))
            }
            Some(_) => return Err(Error::config("[corpus] needs exactly one of `manifest` or `synth`")),
        };

        let base_text = McnnConfig::preset(preset.kernels());
        let lambda_grid = self.text.lambda_grid.clone().unwrap_or_else(|| LAMBDA_GRID.to_vec());
        if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::config("lambda_grid must be a nonempty list of values >= 0"));
        }
        let text = ResolvedText {
            lambda_grid,
            kernel_sizes: self.text.kernel_sizes.clone().unwrap_or(base_text.kernel_sizes),
            embed_dim: self.text.embed_dim.unwrap_or(base_text.embed_dim),
            filters_per_module: self.text.filters_per_module.unwrap_or(base_text.filters_per_module),
            train: resolve_train(self.text.epochs, self.text.batch_size, self.text.learning_rate, 40)?,
        };
        text.model_config(2, 0.0).validate()?;

        let base_ac = LstmConfig::preset(preset.acoustic());
        let acoustic = ResolvedAcoustic {
            num_lstm_layers: self.acoustic.num_lstm_layers.unwrap_or(base_ac.num_lstm_layers),
            units_per_layer: self.acoustic.units_per_layer.unwrap_or(base_ac.units_per_layer),
            dense_units: self.acoustic.dense_units.unwrap_or(base_ac.dense_units),
            dropout_prob: self.acoustic.dropout_prob.unwrap_or(base_ac.dropout_prob),
            train: resolve_train(
                self.acoustic.epochs,
                self.acoustic.batch_size,
                self.acoustic.learning_rate,
                base_ac.batch_size,
            )?,
        };
        acoustic.model_config(1, 2).validate()?;

        let evector_alpha = self.evector.alpha.unwrap_or(1.0);
        if !(evector_alpha > 0.0 && evector_alpha.is_finite()) {
            return Err(Error::config("evector alpha must be > 0"));
        }

        let svm = SvmConfig::default();
        let fusion = ResolvedFusion {
            systems: self.fusion.systems.clone(),
            combinations: over
                .combinations
                .clone()
                .unwrap_or_else(|| self.fusion.combinations.clone()),
            reg_constant: self.fusion.reg_constant.unwrap_or(svm.reg_constant),
            epochs: self.fusion.epochs.unwrap_or(svm.epochs),
            eta0: self.fusion.eta0.unwrap_or(svm.eta0),
        };
        for c in &fusion.combinations {
            Combination::parse(c)?;
        }
        let f = fusion.svm();
        if !(f.reg_constant > 0.0 && f.eta0 > 0.0 && f.epochs > 0) {
            return Err(Error::config("fusion reg_constant, eta0 and epochs must be positive"));
        }

        let max_modules = self.sweep.max_modules.unwrap_or(DEFAULT_SWEEP_MODULES);
        let sweep = ResolvedSweep {
            max_modules,
            kernel_sizes: self
                .sweep
                .kernel_sizes
                .clone()
                .unwrap_or_else(|| default_sweep_kernels(max_modules)),
        };
        if max_modules == 0 || sweep.kernel_sizes.len() < max_modules {
            return Err(Error::config(format!(
                "sweep of {max_modules} modules needs at least that many kernel sizes"
            )));
        }

        Ok(Resolved {
            seed: over.seed.or(self.seed).unwrap_or(0),
            folds,
            preset,
            out,
            balance_classes: self.balance_classes,
            report_wa: self.report_wa.unwrap_or(preset == Preset::Iemocap),
            corpus,
            text,
            acoustic,
            evector_alpha,
            fusion,
            sweep,
        })
    }
}

impl ResolvedText {
    pub fn model_config(&self, num_classes: usize, lambda: f64) -> McnnConfig {
        McnnConfig {
            kernel_sizes: self.kernel_sizes.clone(),
            embed_dim: self.embed_dim,
            filters_per_module: self.filters_per_module,
            num_classes,
            lambda,
        }
    }
}

impl ResolvedAcoustic {
    pub fn model_config(&self, input_dim: usize, num_classes: usize) -> LstmConfig {
        LstmConfig {
            input_dim,
            num_lstm_layers: self.num_lstm_layers,
            units_per_layer: self.units_per_layer,
            dense_units: self.dense_units,
            num_classes,
            dropout_prob: self.dropout_prob,
            batch_size: self.train.batch_size,
        }
    }
}

impl ResolvedFusion {
    pub fn svm(&self) -> SvmConfig {
        SvmConfig {
            reg_constant: self.reg_constant,
            epochs: self.epochs,
            eta0: self.eta0,
        }
    }
}

impl Resolved {
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}
