//! Late fusion: per-system score vectors are concatenated, standardized with
//! training-fold statistics, and classified by a linear SVM fitted on
//! training-fold scores.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::metrics::{ConfusionMatrix, MetricRow};
use crate::rng::Rng;
use crate::svm::{svm_fit, svm_predict, Standardizer, SvmConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBlock {
    pub system: String,
    pub values: Vec<f64>,
}

/// All system scores for one utterance, in a fixed block order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub utterance_id: String,
    pub blocks: Vec<ScoreBlock>,
    pub label: Option<usize>,
}

impl ScoreRecord {
    pub fn block(&self, system: &str) -> Option<&ScoreBlock> {
        self.blocks.iter().find(|b| b.system == system)
    }

    fn layout(&self) -> Vec<(&str, usize)> {
        self.blocks.iter().map(|b| (b.system.as_str(), b.values.len())).collect()
    }
}

/// Blocks concatenated in declared order.
pub fn concat_scores(record: &ScoreRecord) -> Result<Vec<f64>> {
    if record.blocks.is_empty() {
        return Err(shape_err!("record {} has no score blocks", record.utterance_id));
    }
    Ok(record.blocks.iter().flat_map(|b| b.values.iter().copied()).collect())
}

/// Concatenates every record after checking they share one block layout.
pub fn concat_all(records: &[ScoreRecord]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let layout = first.layout();
    records
        .iter()
        .map(|r| {
            if r.layout() != layout {
                return Err(shape_err!(
                    "record {} has block layout {:?}, expected {:?}",
                    r.utterance_id,
                    r.layout(),
                    layout
                ));
            }
            concat_scores(r)
        })
        .collect()
}

/// Systems fused in one experiment row, e.g. `["MCNN", "LSTM"]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combination(pub Vec<String>);

impl Combination {
    /// Parses `"MCNN+LSTM"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let systems: Vec<String> = spec.split('+').map(|s| String::from(s.trim())).collect();
        if systems.iter().any(String::is_empty) {
            return Err(Error::Config(alloc::format!("empty system name in combination {:?}", spec)));
        }
        let distinct: BTreeSet<&String> = systems.iter().collect();
        if distinct.len() != systems.len() {
            return Err(Error::Config(alloc::format!("system repeated in combination {:?}", spec)));
        }
        Ok(Self(systems))
    }

    pub fn name(&self) -> String {
        self.0.join(" + ")
    }

    /// Keeps only this combination's blocks, in its order.
    pub fn select(&self, record: &ScoreRecord) -> Result<ScoreRecord> {
        let blocks = self
            .0
            .iter()
            .map(|s| {
                record.block(s).cloned().ok_or_else(|| {
                    Error::Coverage(alloc::format!("utterance {} has no {} scores", record.utterance_id, s))
                })
            })
            .collect::<Result<_>>()?;
        Ok(ScoreRecord {
            utterance_id: record.utterance_id.clone(),
            blocks,
            label: record.label,
        })
    }
}

/// Scores for one cross-validation round.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionRound {
    pub train: Vec<ScoreRecord>,
    pub test: Vec<ScoreRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub combination: Combination,
    pub per_round: Vec<ConfusionMatrix>,
    /// Test confusions pooled over rounds.
    pub pooled: ConfusionMatrix,
    pub row: MetricRow,
}

fn labelled(records: &[ScoreRecord]) -> Result<Vec<usize>> {
    records
        .iter()
        .map(|r| {
            r.label
                .ok_or_else(|| Error::Coverage(alloc::format!("utterance {} has no label", r.utterance_id)))
        })
        .collect()
}

/// Train and test ids of a round must not overlap.
pub fn audit_isolation(round: &FusionRound) -> Result<()> {
    let train: BTreeSet<&str> = round.train.iter().map(|r| r.utterance_id.as_str()).collect();
    if let Some(r) = round.test.iter().find(|r| train.contains(r.utterance_id.as_str())) {
        return Err(Error::Precondition(alloc::format!(
            "utterance {} is in both the training and test scores of a round",
            r.utterance_id
        )));
    }
    Ok(())
}

/// Fits one SVM per round and combination on training scores and evaluates
/// it on that round's test scores.
pub fn run_fusion_experiment(
    rounds: &[FusionRound],
    combinations: &[Combination],
    num_classes: usize,
    cfg: &SvmConfig,
    seed: u64,
) -> Result<Vec<FusionResult>> {
    if rounds.is_empty() {
        return Err(Error::Precondition("no cross-validation rounds".into()));
    }
    rounds.iter().try_for_each(audit_isolation)?;
    let mut results = Vec::with_capacity(combinations.len());
    for (ci, combo) in combinations.iter().enumerate() {
        let mut pooled = ConfusionMatrix::new(num_classes);
        let mut per_round = Vec::with_capacity(rounds.len());
        for (ri, round) in rounds.iter().enumerate() {
            let train: Vec<ScoreRecord> = round.train.iter().map(|r| combo.select(r)).collect::<Result<_>>()?;
            let test: Vec<ScoreRecord> = round.test.iter().map(|r| combo.select(r)).collect::<Result<_>>()?;
            let raw = concat_all(&train)?;
            let scaler = Standardizer::fit(&raw)?;
            let xs: Vec<Vec<f64>> = raw.iter().map(|x| scaler.apply(x)).collect::<Result<_>>()?;
            let ys = labelled(&train)?;
            let mut rng = Rng::new(seed ^ ((ci as u64) << 32) ^ ri as u64);
            let (model, _) = svm_fit(&xs, &ys, num_classes, cfg, &mut rng)?;
            let mut cm = ConfusionMatrix::new(num_classes);
            let test_x = concat_all(&test)?;
            for (x, y) in test_x.iter().zip(labelled(&test)?) {
                cm.record(y, svm_predict(&model, &scaler.apply(x)?)?.0)?;
            }
            pooled.merge(&cm)?;
            per_round.push(cm);
        }
        let row = MetricRow::from_confusion(combo.name(), &pooled)?;
        results.push(FusionResult {
            combination: combo.clone(),
            per_round,
            pooled,
            row,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(id: &str, blocks: &[(&str, &[f64])], label: usize) -> ScoreRecord {
        ScoreRecord {
            utterance_id: id.into(),
            blocks: blocks
                .iter()
                .map(|(s, v)| ScoreBlock {
                    system: (*s).into(),
                    values: v.to_vec(),
                })
                .collect(),
            label: Some(label),
        }
    }

    #[test]
    fn concatenation() {
        let r = rec("u", &[("A", &[0.6, 0.4]), ("B", &[0.3, 0.7])], 0);
        assert_eq!(concat_scores(&r).unwrap(), vec![0.6, 0.4, 0.3, 0.7]);
        let single = rec("u", &[("A", &[0.6, 0.4])], 0);
        assert_eq!(concat_scores(&single).unwrap(), vec![0.6, 0.4]);
        let three = rec("u", &[("A", &[0.25; 4]), ("B", &[0.25; 4]), ("C", &[0.25; 4])], 0);
        assert_eq!(concat_scores(&three).unwrap().len(), 12);
    }

    #[test]
    fn layout_mismatch_is_shape_error() {
        let a = rec("a", &[("A", &[0.6, 0.4])], 0);
        let b = rec("b", &[("A", &[0.6, 0.3, 0.1])], 1);
        assert!(matches!(concat_all(&[a, b]), Err(Error::Shape(_))));
    }

    #[test]
    fn combination_parsing_and_coverage() {
        let c = Combination::parse("MCNN + LSTM").unwrap();
        assert_eq!(c.name(), "MCNN + LSTM");
        let r = rec("x", &[("MCNN", &[1.0, 0.0])], 0);
        assert!(matches!(c.select(&r), Err(Error::Coverage(_))));
        assert!(Combination::parse(" + ").is_err());
        assert!(Combination::parse("MCNN+").is_err());
        assert!(Combination::parse("LSTM+LSTM").is_err());
    }

    #[test]
    fn overlapping_round_rejected() {
        let a = rec("a", &[("A", &[1.0, 0.0])], 0);
        let round = FusionRound {
            train: vec![a.clone()],
            test: vec![a],
        };
        assert!(audit_isolation(&round).is_err());
    }
}
