//! Mini-batch Adam training loops with best-validation snapshots.

use alloc::vec::Vec;

use crate::acoustic::{AcousticExample, LstmModel};
use crate::error::{Error, Result};
use crate::layers::{softmax_cross_entropy, DropoutMode};
use crate::math::argmax;
use crate::metrics::{confusion, ua, wa, ConfusionMatrix};
use crate::objective::{batch_objective, cosine, BatchMember, PairBatch};
use crate::param::AdamConfig;
use crate::rng::Rng;
use crate::text::{McnnModel, PaddedTokens};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 40,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        self.adam.validate()
    }
}

/// One line of the training log. Epoch 0 is measured before any update.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_loss_normalized: f64,
    pub val_ua: f64,
    pub val_wa: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Snapshot with the best validation UA (earliest on ties).
    pub model: M,
    pub best_epoch: usize,
    /// State after the last epoch.
    pub final_model: M,
    pub log: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextExample {
    pub tokens: PaddedTokens,
    pub label: usize,
}

fn check_sets(train_len: usize, val_len: usize) -> Result<()> {
    if train_len == 0 {
        return Err(Error::Precondition("empty training set".into()));
    }
    if val_len == 0 {
        return Err(Error::Precondition("empty validation set".into()));
    }
    Ok(())
}

fn batches(order: &[usize], size: usize) -> impl Iterator<Item = &[usize]> {
    order.chunks(size)
}

/// Confusion matrix of argmax predictions.
pub fn evaluate_text(model: &McnnModel, examples: &[TextExample]) -> Result<ConfusionMatrix> {
    let mut preds = Vec::with_capacity(examples.len());
    for ex in examples {
        preds.push(argmax(&model.forward(&ex.tokens)?.posteriors));
    }
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    confusion(&preds, &labels, model.config.num_classes)
}

fn text_batch_loss(model: &McnnModel, examples: &[TextExample], idx: &[usize]) -> Result<(f64, f64)> {
    let mut members = Vec::with_capacity(idx.len());
    for &i in idx {
        let fwd = model.forward(&examples[i].tokens)?;
        members.push(BatchMember {
            embedding: fwd.embedding,
            label: examples[i].label,
            logits: fwd.logits,
        });
    }
    let v = batch_objective(&PairBatch {
        members,
        lambda: model.config.lambda,
    })?;
    Ok((v.total, v.normalized))
}

/// Gradient of the batch objective accumulated into `model`; returns
/// `(C, C normalized)`.
pub fn text_batch_step(model: &mut McnnModel, examples: &[TextExample], idx: &[usize]) -> Result<(f64, f64)> {
    let mut forwards = Vec::with_capacity(idx.len());
    for &i in idx {
        forwards.push(model.forward(&examples[i].tokens)?);
    }
    let members = forwards
        .iter()
        .zip(idx)
        .map(|(f, &i)| BatchMember {
            embedding: f.embedding.clone(),
            label: examples[i].label,
            logits: f.logits.clone(),
        })
        .collect();
    let v = batch_objective(&PairBatch {
        members,
        lambda: model.config.lambda,
    })?;
    for ((fwd, de), dl) in forwards.iter().zip(&v.d_embeddings).zip(&v.d_logits) {
        model.backward(fwd, de, dl)?;
    }
    Ok((v.total, v.normalized))
}

fn finite_or_abort(epoch: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(alloc::format!("training loss became {} in epoch {}", loss, epoch)))
    }
}

/// Trains with the combined objective at the model's configured lambda.
pub fn train_text_model(
    mut model: McnnModel,
    train: &[TextExample],
    val: &[TextExample],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome<McnnModel>> {
    cfg.validate()?;
    check_sets(train.len(), val.len())?;
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = Vec::with_capacity(cfg.epochs + 1);
    let (mut loss, mut norm, mut nb) = (0.0, 0.0, 0usize);
    for idx in batches(&order, cfg.batch_size) {
        let (c, cn) = text_batch_loss(&model, train, idx)?;
        loss += c;
        norm += cn;
        nb += 1;
    }
    let cm = evaluate_text(&model, val)?;
    log.push(EpochRecord {
        epoch: 0,
        train_loss: loss,
        train_loss_normalized: norm / nb as f64,
        val_ua: ua(&cm)?,
        val_wa: wa(&cm)?,
    });
    let mut best = (log[0].val_ua, 0usize, model.clone());

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let (mut loss, mut norm, mut nb) = (0.0, 0.0, 0usize);
        for idx in batches(&order, cfg.batch_size) {
            model.zero_grad();
            let (c, cn) = text_batch_step(&mut model, train, idx)?;
            finite_or_abort(epoch, c)?;
            model.step(&cfg.adam);
            loss += c;
            norm += cn;
            nb += 1;
        }
        let cm = evaluate_text(&model, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss,
            train_loss_normalized: norm / nb as f64,
            val_ua: ua(&cm)?,
            val_wa: wa(&cm)?,
        };
        if record.val_ua > best.0 {
            best = (record.val_ua, epoch, model.clone());
        }
        log.push(record);
    }
    Ok(TrainOutcome {
        model: best.2,
        best_epoch: best.1,
        final_model: model,
        log,
    })
}

/// λ values searched when a grid search is requested.
pub const LAMBDA_GRID: [f64; 3] = [0.05, 0.10, 0.15];

/// Trains one model per λ from identical initial state and shuffles, and
/// keeps the one with the best validation UA (earliest λ on ties).
pub fn select_lambda<F>(
    grid: &[f64],
    mut make_model: F,
    train: &[TextExample],
    val: &[TextExample],
    cfg: &TrainConfig,
    rng: &Rng,
) -> Result<(f64, TrainOutcome<McnnModel>)>
where
    F: FnMut(f64) -> Result<McnnModel>,
{
    let mut best: Option<(f64, f64, TrainOutcome<McnnModel>)> = None;
    for &lambda in grid {
        let model = make_model(lambda)?;
        let mut run_rng = rng.clone();
        let outcome = train_text_model(model, train, val, cfg, &mut run_rng)?;
        let score = outcome.log[outcome.best_epoch].val_ua;
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((lambda, score, outcome));
        }
    }
    best.map(|(l, _, o)| (l, o))
        .ok_or_else(|| Error::Config("empty lambda grid".into()))
}

/// Mean cosine similarity of utterance embeddings over same-label pairs and
/// over different-label pairs.
pub fn embedding_cosine_means(model: &McnnModel, examples: &[TextExample]) -> Result<(f64, f64)> {
    let embs: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| model.forward(&e.tokens).map(|f| f.embedding))
        .collect::<Result<_>>()?;
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for a in 0..embs.len() {
        for b in a + 1..embs.len() {
            let cos = cosine(&embs[a], &embs[b]);
            if examples[a].label == examples[b].label {
                intra += cos;
                n_intra += 1;
            } else {
                inter += cos;
                n_inter += 1;
            }
        }
    }
    if n_intra == 0 || n_inter == 0 {
        return Err(Error::Degenerate("need both same-class and cross-class pairs".into()));
    }
    Ok((intra / n_intra as f64, inter / n_inter as f64))
}

/// Confusion matrix of argmax predictions in eval mode.
pub fn evaluate_acoustic(model: &LstmModel, examples: &[AcousticExample]) -> Result<ConfusionMatrix> {
    let mut rng = Rng::new(0);
    let mut preds = Vec::with_capacity(examples.len());
    for ex in examples {
        let fwd = model.forward(&ex.frames, DropoutMode::Eval, &mut rng)?;
        preds.push(argmax(&fwd.posteriors));
    }
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    confusion(&preds, &labels, model.config.num_classes)
}

/// Mean cross-entropy over `examples` in eval mode.
pub fn acoustic_mean_loss(model: &LstmModel, examples: &[AcousticExample]) -> Result<f64> {
    let mut rng = Rng::new(0);
    let mut total = 0.0;
    for ex in examples {
        let fwd = model.forward(&ex.frames, DropoutMode::Eval, &mut rng)?;
        total += softmax_cross_entropy(&fwd.logits, ex.label)?.loss;
    }
    Ok(total / examples.len().max(1) as f64)
}

/// Cross-entropy training of the acoustic branch. Each batch's gradient is
/// the mean over its utterances, each processed independently.
pub fn train_acoustic(
    mut model: LstmModel,
    train: &[AcousticExample],
    val: &[AcousticExample],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome<LstmModel>> {
    cfg.validate()?;
    check_sets(train.len(), val.len())?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs + 1);
    let initial = acoustic_mean_loss(&model, train)?;
    let cm = evaluate_acoustic(&model, val)?;
    log.push(EpochRecord {
        epoch: 0,
        train_loss: initial,
        train_loss_normalized: initial,
        val_ua: ua(&cm)?,
        val_wa: wa(&cm)?,
    });
    let mut best = (log[0].val_ua, 0usize, model.clone());

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for idx in batches(&order, cfg.batch_size) {
            model.zero_grad();
            let scale = 1.0 / idx.len() as f64;
            for &i in idx {
                let ex = &train[i];
                let fwd = model.forward(&ex.frames, DropoutMode::Train, rng)?;
                let ce = softmax_cross_entropy(&fwd.logits, ex.label)?;
                total += ce.loss;
                let d_logits: Vec<f64> = ce.grad.iter().map(|g| g * scale).collect();
                model.backward(&fwd, &d_logits)?;
            }
            finite_or_abort(epoch, total)?;
            model.step(&cfg.adam);
        }
        let mean = total / train.len() as f64;
        let cm = evaluate_acoustic(&model, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: mean,
            train_loss_normalized: mean,
            val_ua: ua(&cm)?,
            val_wa: wa(&cm)?,
        };
        if record.val_ua > best.0 {
            best = (record.val_ua, epoch, model.clone());
        }
        log.push(record);
    }
    Ok(TrainOutcome {
        model: best.2,
        best_epoch: best.1,
        final_model: model,
        log,
    })
}
