//! End-to-end experiment pipelines. Each one computes all of its outputs in
//! memory; [`Outputs::write`] puts them on disk afterwards, so a run that
//! fails part way leaves no output directory behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emofuse_core::acoustic::{FeatureNormalizer, LstmModel};
use emofuse_core::corpus::{balance_classes, make_folds, FoldPlan, Split};
use emofuse_core::evector::WordWeightTable;
use emofuse_core::experiment::{prepare_text_round, sweep_modules};
use emofuse_core::fusion::{run_fusion_experiment, Combination};
use emofuse_core::math::argmax;
use emofuse_core::metrics::ConfusionMatrix;
use emofuse_core::text::McnnModel;
use emofuse_core::training::{select_lambda, train_acoustic, TextExample};
use emofuse_core::{Matrix, Rng};

use crate::config::{Resolved, ResolvedCorpus};
use crate::dataset::Dataset;
use crate::error::{self, Error, Result};
use crate::formats::checkpoint::Checkpoint;
use crate::formats::epochs::{render_epochs, EpochLine};
use crate::formats::evector_table::render_table;
use crate::formats::manifest::load_manifest;
use crate::formats::scores::{assemble_rounds, load_scores, render_scores, ScoreLine};
use crate::formats::tables::{render_sweep_json, render_sweep_text, ResultsTable, SweepLine, TableRow};
use crate::synth::synth_corpus;

pub const TEXT_SYSTEM: &str = "MCNN";
pub const ACOUSTIC_SYSTEM: &str = "LSTM";
pub const EVECTOR_SYSTEM: &str = "E-vector";

pub const SCORES_FILE: &str = "scores.jsonl";
pub const LABELS_FILE: &str = "labels.json";
pub const RESULTS_TEXT: &str = "results.txt";
pub const RESULTS_JSON: &str = "results.json";
pub const CONFIG_ECHO: &str = "effective_config.json";
pub const RUN_LOG: &str = "run.log";

/// Independent random streams, so that e.g. fold assignment does not depend
/// on which command is running.
#[derive(Clone, Copy)]
enum Stream {
    Folds = 1,
    Balance = 2,
    Init = 3,
    Shuffle = 4,
    Svm = 5,
    Sweep = 6,
}

fn stream(seed: u64, s: Stream, round: usize) -> Rng {
    Rng::new(seed).fork(((s as u64) << 32) | round as u64)
}

/// Files to write, relative to the output directory, in write order.
#[derive(Debug, Default, Clone)]
pub struct Outputs {
    pub files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, contents: String) {
        self.files.push((path.into(), contents));
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|(p, _)| p == Path::new(path)).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (rel, contents) in &self.files {
            error::write(&dir.join(rel), contents)?;
        }
        Ok(())
    }
}

/// A corpus with its fold plan.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: Dataset,
    pub plan: FoldPlan,
}

pub fn prepare(cfg: &Resolved) -> Result<Prepared> {
    let mut data: Dataset = match &cfg.corpus {
        Some(ResolvedCorpus::Manifest(path)) => load_manifest(path)?.into(),
        Some(ResolvedCorpus::Synth(spec)) => synth_corpus(spec, cfg.seed)?.dataset(),
        None => return Err(Error::config("this command needs a [corpus] section")),
    };
    if cfg.balance_classes {
        data.corpus = balance_classes(&data.corpus, &mut stream(cfg.seed, Stream::Balance, 0))?;
    }
    let plan = make_folds(&data.corpus, cfg.folds, &mut stream(cfg.seed, Stream::Folds, 0))?;
    Ok(Prepared { data, plan })
}

const SPLITS: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

/// Result of one train-* pipeline.
#[derive(Debug, Clone)]
pub struct SystemRun {
    pub system: String,
    pub labels: Vec<String>,
    pub scores: Vec<ScoreLine>,
    pub pooled: ConfusionMatrix,
    pub per_round: Vec<ConfusionMatrix>,
    pub table: ResultsTable,
    pub outputs: Outputs,
}

fn score_line(round: usize, split: Split, id: &str, system: &str, label: usize, scores: Vec<f64>) -> ScoreLine {
    ScoreLine {
        round,
        split: split.as_str().into(),
        id: id.into(),
        system: system.into(),
        label: Some(label),
        scores,
    }
}

fn finish(
    cfg: &Resolved,
    system: &str,
    labels: Vec<String>,
    scores: Vec<ScoreLine>,
    per_round: Vec<ConfusionMatrix>,
    mut outputs: Outputs,
) -> Result<SystemRun> {
    let mut pooled = ConfusionMatrix::new(labels.len());
    for cm in &per_round {
        pooled.merge(cm)?;
    }
    let table = ResultsTable {
        labels: labels.clone(),
        rows: vec![TableRow::new(system, &pooled, &per_round, cfg.report_wa)?],
    };
    outputs.add(CONFIG_ECHO, cfg.render());
    outputs.add(LABELS_FILE, render_labels(&labels));
    outputs.add(SCORES_FILE, render_scores(&scores));
    outputs.add(RESULTS_TEXT, table.render_text());
    outputs.add(RESULTS_JSON, table.render_json());
    Ok(SystemRun {
        system: system.into(),
        labels,
        scores,
        pooled,
        per_round,
        table,
        outputs,
    })
}

fn render_labels(labels: &[String]) -> String {
    let mut s = serde_json::to_string(labels).expect("strings serialize");
    s.push('\n');
    s
}

/// Argmax of `scores` on the test split into `cm`.
fn record_test(cm: &mut ConfusionMatrix, line: &ScoreLine) -> Result<()> {
    if line.split == Split::Test.as_str() {
        let label = line.label.ok_or_else(|| Error::Format(format!("utterance {} has no label", line.id)))?;
        cm.record(label, argmax(&line.scores))?;
    }
    Ok(())
}

pub fn train_text(cfg: &Resolved, prep: &Prepared) -> Result<SystemRun> {
    let corpus = &prep.data.corpus;
    let k = corpus.num_classes();
    let base = cfg.text.model_config(k, 0.0);
    base.validate()?;
    let train_cfg = cfg.text.train.to_core();
    let mut scores = Vec::new();
    let mut epochs = Vec::new();
    let mut per_round = Vec::new();
    let mut outputs = Outputs::default();
    for round in 0..prep.plan.k() {
        let data = prepare_text_round(corpus, &prep.plan, round, base.max_kernel())?;
        let vocab_len = data.vocab.len();
        let make = |lambda: f64| {
            let config = cfg.text.model_config(k, lambda);
            McnnModel::new(config, vocab_len, &mut stream(cfg.seed, Stream::Init, round))
        };
        let shuffle = stream(cfg.seed, Stream::Shuffle, round);
        let (lambda, outcome) = select_lambda(
            &cfg.text.lambda_grid,
            make,
            &data.train,
            &data.validation,
            &train_cfg,
            &shuffle,
        )?;
        epochs.extend(outcome.log.iter().map(|r| EpochLine::new(round, Some(lambda), r)));
        let mut cm = ConfusionMatrix::new(k);
        for (split, examples) in SPLITS.into_iter().zip([&data.train, &data.validation, &data.test]) {
            let ids = prep.plan.indices(corpus, round, split)?;
            for (&i, ex) in ids.iter().zip(examples.iter()) {
                let post = outcome.model.forward(&ex.tokens)?.posteriors;
                let line = score_line(round, split, &corpus.utterances[i].id, TEXT_SYSTEM, ex.label, post);
                record_test(&mut cm, &line)?;
                scores.push(line);
            }
        }
        per_round.push(cm);
        outputs.add(
            format!("checkpoints/round{round}.json"),
            Checkpoint::from_mcnn(&outcome.model, &data.vocab).render(),
        );
    }
    outputs.add("epochs.jsonl", render_epochs(&epochs));
    finish(cfg, TEXT_SYSTEM, corpus.label_names.clone(), scores, per_round, outputs)
}

/// Normalizer fitted on the round's training utterances only.
pub fn fit_round_normalizer(frames: &[Matrix], train_idx: &[usize]) -> Result<FeatureNormalizer> {
    Ok(FeatureNormalizer::fit(train_idx.iter().map(|&i| &frames[i]))?)
}

pub fn train_acoustic_system(cfg: &Resolved, prep: &Prepared) -> Result<SystemRun> {
    let corpus = &prep.data.corpus;
    let k = corpus.num_classes();
    let raw = prep.data.all_frames()?;
    let dim = raw.first().map_or(0, Matrix::cols);
    if let Some((u, m)) = corpus.utterances.iter().zip(&raw).find(|(_, m)| m.cols() != dim) {
        return Err(emofuse_core::Error::Shape(format!(
            "utterance {} has {} feature dimensions, corpus has {dim}",
            u.id,
            m.cols()
        ))
        .into());
    }
    let model_cfg = cfg.acoustic.model_config(dim, k);
    model_cfg.validate()?;
    let train_cfg = cfg.acoustic.train.to_core();
    let mut scores = Vec::new();
    let mut epochs = Vec::new();
    let mut per_round = Vec::new();
    let mut outputs = Outputs::default();
    for round in 0..prep.plan.k() {
        let idx: Vec<Vec<usize>> = SPLITS
            .iter()
            .map(|&s| prep.plan.indices(corpus, round, s))
            .collect::<emofuse_core::Result<_>>()?;
        let norm = fit_round_normalizer(&raw, &idx[0])?;
        let frames: Vec<Matrix> = raw.iter().map(|f| norm.apply(f)).collect::<emofuse_core::Result<_>>()?;
        let sets: Vec<_> = idx.iter().map(|ix| prep.data.acoustic_examples(&frames, ix)).collect();
        let model = LstmModel::new(model_cfg.clone(), &mut stream(cfg.seed, Stream::Init, round))?;
        let mut rng = stream(cfg.seed, Stream::Shuffle, round);
        let outcome = train_acoustic(model, &sets[0], &sets[1], &train_cfg, &mut rng)?;
        epochs.extend(outcome.log.iter().map(|r| EpochLine::new(round, None, r)));
        let mut cm = ConfusionMatrix::new(k);
        let mut eval_rng = Rng::new(0);
        for (s, split) in SPLITS.into_iter().enumerate() {
            for (&i, ex) in idx[s].iter().zip(&sets[s]) {
                let fwd = outcome
                    .model
                    .forward(&ex.frames, emofuse_core::layers::DropoutMode::Eval, &mut eval_rng)?;
                let line = score_line(round, split, &corpus.utterances[i].id, ACOUSTIC_SYSTEM, ex.label, fwd.posteriors);
                record_test(&mut cm, &line)?;
                scores.push(line);
            }
        }
        per_round.push(cm);
        outputs.add(
            format!("checkpoints/round{round}.json"),
            Checkpoint::from_lstm(&outcome.model, &norm).render(),
        );
    }
    outputs.add("epochs.jsonl", render_epochs(&epochs));
    finish(cfg, ACOUSTIC_SYSTEM, corpus.label_names.clone(), scores, per_round, outputs)
}

/// Word-weight table fitted on the round's training utterances only.
pub fn fit_round_table(prep: &Prepared, round: usize, alpha: f64) -> Result<WordWeightTable> {
    let corpus = &prep.data.corpus;
    let train = prep.plan.indices(corpus, round, Split::Train)?;
    Ok(WordWeightTable::fit(
        train.iter().map(|&i| (corpus.utterances[i].tokens.as_slice(), corpus.utterances[i].label)),
        corpus.num_classes(),
        alpha,
    )?)
}

/// E-vectors scored per round, classified by the fusion SVM on the e-vector
/// block alone.
pub fn train_evector(cfg: &Resolved, prep: &Prepared) -> Result<SystemRun> {
    let corpus = &prep.data.corpus;
    let k = corpus.num_classes();
    let mut scores = Vec::new();
    let mut outputs = Outputs::default();
    for round in 0..prep.plan.k() {
        let table = fit_round_table(prep, round, cfg.evector_alpha)?;
        for split in SPLITS {
            for i in prep.plan.indices(corpus, round, split)? {
                let u = &corpus.utterances[i];
                scores.push(score_line(round, split, &u.id, EVECTOR_SYSTEM, u.label, table.evector(&u.tokens)));
            }
        }
        outputs.add(format!("tables/round{round}.jsonl"), render_table(&table));
    }
    let rounds = assemble_rounds(std::slice::from_ref(&scores))?;
    let combo = Combination(vec![EVECTOR_SYSTEM.into()]);
    let svm_seed = stream(cfg.seed, Stream::Svm, 0).seed();
    let result = run_fusion_experiment(&rounds, &[combo], k, &cfg.fusion.svm(), svm_seed)?.remove(0);
    finish(cfg, EVECTOR_SYSTEM, corpus.label_names.clone(), scores, result.per_round, outputs)
}

/// Score set and class names written by a train-* run.
pub fn load_system(dir: &Path) -> Result<(Vec<String>, Vec<ScoreLine>)> {
    let labels_path = dir.join(LABELS_FILE);
    let labels: Vec<String> = serde_json::from_str(&error::read_to_string(&labels_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", labels_path.display())))?;
    Ok((labels, load_scores(&dir.join(SCORES_FILE))?))
}

#[derive(Debug, Clone)]
pub struct FusionRun {
    pub table: ResultsTable,
    pub outputs: Outputs,
}

/// Everything `fuse` needs, read and checked before any training.
#[derive(Debug, Clone)]
pub struct FusionInputs {
    pub labels: Vec<String>,
    pub systems: Vec<Vec<ScoreLine>>,
    pub combinations: Vec<Combination>,
}

pub fn load_fusion_inputs(cfg: &Resolved) -> Result<FusionInputs> {
    if cfg.fusion.systems.is_empty() {
        return Err(Error::config("fusion.systems lists no score directories"));
    }
    if cfg.fusion.combinations.is_empty() {
        return Err(Error::config("no fusion combinations (set fusion.combinations or pass --combinations)"));
    }
    let mut labels: Option<Vec<String>> = None;
    let mut systems = Vec::new();
    for dir in &cfg.fusion.systems {
        let (l, s) = load_system(dir)?;
        if labels.as_ref().is_some_and(|prev| *prev != l) {
            return Err(Error::Format(format!("{}: class names differ from the other systems", dir.display())));
        }
        labels = Some(l);
        systems.push(s);
    }
    let combinations = cfg
        .fusion
        .combinations
        .iter()
        .map(|c| Combination::parse(c))
        .collect::<emofuse_core::Result<Vec<_>>>()?;
    Ok(FusionInputs {
        labels: labels.unwrap_or_default(),
        systems,
        combinations,
    })
}

pub fn fuse(cfg: &Resolved, inputs: &FusionInputs) -> Result<FusionRun> {
    let rounds = assemble_rounds(&inputs.systems)?;
    let k = inputs.labels.len();
    let svm_seed = stream(cfg.seed, Stream::Svm, 0).seed();
    let results = run_fusion_experiment(&rounds, &inputs.combinations, k, &cfg.fusion.svm(), svm_seed)?;
    let rows = results
        .iter()
        .map(|r| TableRow::new(&r.combination.name(), &r.pooled, &r.per_round, cfg.report_wa))
        .collect::<Result<Vec<_>>>()?;
    let table = ResultsTable {
        labels: inputs.labels.clone(),
        rows,
    };
    let mut outputs = Outputs::default();
    outputs.add(CONFIG_ECHO, cfg.render());
    outputs.add(RESULTS_TEXT, table.render_text());
    outputs.add(RESULTS_JSON, table.render_json());
    Ok(FusionRun { table, outputs })
}

pub fn sweep(cfg: &Resolved, prep: &Prepared) -> Result<(Vec<SweepLine>, Outputs)> {
    let corpus = &prep.data.corpus;
    let base = cfg.text.model_config(corpus.num_classes(), 0.0);
    let seed = stream(cfg.seed, Stream::Sweep, 0).seed();
    let rows = sweep_modules(
        corpus,
        &prep.plan,
        cfg.sweep.max_modules,
        &base,
        &cfg.sweep.kernel_sizes,
        &cfg.text.train.to_core(),
        seed,
    )?;
    let lines: Vec<SweepLine> = rows.iter().map(SweepLine::from).collect();
    let mut outputs = Outputs::default();
    outputs.add(CONFIG_ECHO, cfg.render());
    outputs.add("sweep.txt", render_sweep_text(&lines));
    outputs.add("sweep.json", render_sweep_json(&lines));
    Ok((lines, outputs))
}

/// Argmax metrics of a score file on its test split, pooled over rounds.
/// Labels come from the score lines, or from `labels` by utterance id.
pub fn evaluate(
    lines: &[ScoreLine],
    class_names: &[String],
    labels: Option<&BTreeMap<String, usize>>,
    report_wa: bool,
) -> Result<ResultsTable> {
    let k = class_names.len();
    let num_rounds = lines.iter().map(|l| l.round + 1).max().unwrap_or(0);
    let mut per_round = vec![ConfusionMatrix::new(k); num_rounds];
    let mut system = None;
    for line in lines {
        let mut line = line.clone();
        if let Some(map) = labels {
            line.label = Some(*map.get(&line.id).ok_or_else(|| {
                emofuse_core::Error::Coverage(format!("no label for utterance {}", line.id))
            })?);
        }
        if line.scores.len() != k {
            return Err(emofuse_core::Error::Shape(format!(
                "utterance {} has {} scores for {k} classes",
                line.id,
                line.scores.len()
            ))
            .into());
        }
        record_test(&mut per_round[line.round], &line)?;
        system.get_or_insert(line.system);
    }
    let mut pooled = ConfusionMatrix::new(k);
    for cm in &per_round {
        pooled.merge(cm)?;
    }
    Ok(ResultsTable {
        labels: class_names.to_vec(),
        rows: vec![TableRow::new(&system.unwrap_or_default(), &pooled, &per_round, report_wa)?],
    })
}

/// Test-split text examples of a round, for callers that inspect trained
/// models directly.
pub fn text_examples(prep: &Prepared, round: usize, min_length: usize) -> Result<[Vec<TextExample>; 3]> {
    let d = prepare_text_round(&prep.data.corpus, &prep.plan, round, min_length)?;
    Ok([d.train, d.validation, d.test])
}
