//! Per-round data preparation and the module-count sweep.

use alloc::vec::Vec;

use crate::corpus::{Corpus, FoldPlan, Split};
use crate::error::{Error, Result};
use crate::metrics::{ua, wa, ConfusionMatrix};
use crate::rng::Rng;
use crate::text::{pad_tokens, McnnConfig, McnnModel, Vocabulary};
use crate::training::{evaluate_text, train_text_model, TextExample, TrainConfig};

/// Text examples of one round with the vocabulary built from its training
/// folds.
#[derive(Debug, Clone)]
pub struct TextRound {
    pub vocab: Vocabulary,
    pub train: Vec<TextExample>,
    pub validation: Vec<TextExample>,
    pub test: Vec<TextExample>,
}

pub fn prepare_text_round(corpus: &Corpus, plan: &FoldPlan, round: usize, min_length: usize) -> Result<TextRound> {
    let train_idx = plan.indices(corpus, round, Split::Train)?;
    let vocab = Vocabulary::build(train_idx.iter().map(|&i| corpus.utterances[i].tokens.as_slice()));
    let encode = |split: Split| -> Result<Vec<TextExample>> {
        Ok(plan
            .indices(corpus, round, split)?
            .into_iter()
            .map(|i| {
                let u = &corpus.utterances[i];
                TextExample {
                    tokens: pad_tokens(&vocab.encode(&u.tokens), min_length),
                    label: u.label,
                }
            })
            .collect())
    };
    Ok(TextRound {
        train: encode(Split::Train)?,
        validation: encode(Split::Validation)?,
        test: encode(Split::Test)?,
        vocab: vocab.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub num_modules: usize,
    pub kernel_sizes: Vec<usize>,
    pub ua: f64,
    pub wa: f64,
}

/// Trains one MCNN per module count `N = 1..=max_modules`, using the first
/// `N` entries of `kernel_sizes`, with the verification weight forced to 0.
/// Metrics come from test folds pooled over all rounds of `plan`.
pub fn sweep_modules(
    corpus: &Corpus,
    plan: &FoldPlan,
    max_modules: usize,
    base: &McnnConfig,
    kernel_sizes: &[usize],
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if max_modules == 0 || max_modules > kernel_sizes.len() {
        return Err(Error::Config(alloc::format!(
            "sweep up to {} modules needs that many kernel sizes, have {}",
            max_modules,
            kernel_sizes.len()
        )));
    }
    let mut rows = Vec::with_capacity(max_modules);
    for n in 1..=max_modules {
        let config = McnnConfig {
            kernel_sizes: kernel_sizes[..n].to_vec(),
            lambda: 0.0,
            ..base.clone()
        };
        config.validate()?;
        let mut pooled = ConfusionMatrix::new(config.num_classes);
        for round in 0..plan.k() {
            let data = prepare_text_round(corpus, plan, round, config.max_kernel())?;
            let mut rng = Rng::new(seed).fork(round as u64);
            let model = McnnModel::new(config.clone(), data.vocab.len(), &mut rng)?;
            let outcome = train_text_model(model, &data.train, &data.validation, train_cfg, &mut rng)?;
            pooled.merge(&evaluate_text(&outcome.model, &data.test)?)?;
        }
        rows.push(SweepRow {
            num_modules: n,
            kernel_sizes: config.kernel_sizes,
            ua: ua(&pooled)?,
            wa: wa(&pooled)?,
        });
    }
    Ok(rows)
}
