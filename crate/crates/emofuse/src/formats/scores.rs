//! Score files: one line per (round, utterance) with the split the utterance
//! played in that round, its label when known, and the system's vector.

use std::collections::BTreeMap;
use std::path::Path;

use emofuse_core::corpus::Split;
use emofuse_core::fusion::{FusionRound, ScoreBlock, ScoreRecord};
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreLine {
    pub round: usize,
    pub split: String,
    pub id: String,
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub scores: Vec<f64>,
}

pub fn split_name(split: Split) -> &'static str {
    split.as_str()
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "validation" => Ok(Split::Validation),
        "test" => Ok(Split::Test),
        other => Err(Error::Format(format!("unknown split {other:?}"))),
    }
}

pub fn render_scores(lines: &[ScoreLine]) -> String {
    lines.iter().map(error::to_line).collect()
}

pub fn parse_scores(path: &Path, text: &str) -> Result<Vec<ScoreLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let line: ScoreLine = error::parse_line(path, n, l)?;
            parse_split(&line.split)?;
            Ok(line)
        })
        .collect()
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoreLine>> {
    parse_scores(path, &error::read_to_string(path)?)
}

/// Joins the score sets of several systems into per-round fusion inputs.
/// Every system must score exactly the same (round, utterance) pairs with
/// the same split and label; validation-split records are left out.
pub fn assemble_rounds(systems: &[Vec<ScoreLine>]) -> Result<Vec<FusionRound>> {
    type Key = (usize, String);
    let mut joined: BTreeMap<Key, (Split, Option<usize>, Vec<ScoreBlock>)> = BTreeMap::new();
    for (s, lines) in systems.iter().enumerate() {
        let mut seen = 0usize;
        for line in lines {
            let split = parse_split(&line.split)?;
            let key = (line.round, line.id.clone());
            let entry = joined.entry(key).or_insert_with(|| (split, line.label, Vec::new()));
            if entry.0 != split || entry.1 != line.label {
                return Err(Error::Format(format!(
                    "round {} utterance {}: systems disagree on split or label",
                    line.round, line.id
                )));
            }
            if entry.2.len() > s {
                return Err(Error::Format(format!(
                    "{} scores utterance {} twice in round {}",
                    line.system, line.id, line.round
                )));
            }
            if entry.2.len() < s {
                let earlier = systems[s - 1].first().map_or("?", |l| l.system.as_str());
                return Err(coverage(line.round, &line.id, earlier));
            }
            entry.2.push(ScoreBlock {
                system: line.system.clone(),
                values: line.scores.clone(),
            });
            seen += 1;
        }
        if seen != joined.len() {
            let missing = joined.iter().find(|(_, v)| v.2.len() != s + 1).expect("some key is short");
            let system = lines.first().map_or("?", |l| l.system.as_str());
            return Err(coverage(missing.0 .0, &missing.0 .1, system));
        }
    }
    let num_rounds = joined.keys().map(|k| k.0 + 1).max().unwrap_or(0);
    let mut rounds: Vec<FusionRound> = (0..num_rounds)
        .map(|_| FusionRound {
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    for ((round, id), (split, label, blocks)) in joined {
        let record = ScoreRecord {
            utterance_id: id,
            blocks,
            label,
        };
        match split {
            Split::Train => rounds[round].train.push(record),
            Split::Test => rounds[round].test.push(record),
            Split::Validation => {}
        }
    }
    Ok(rounds)
}

fn coverage(round: usize, id: &str, system: &str) -> Error {
    emofuse_core::Error::Coverage(format!("{system} has no score for utterance {id} in round {round}")).into()
}
