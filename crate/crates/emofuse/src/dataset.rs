use std::collections::BTreeMap;
use std::path::PathBuf;

use emofuse_core::acoustic::AcousticExample;
use emofuse_core::corpus::{Corpus, Utterance};
use emofuse_core::Matrix;

use crate::error::Result;
use crate::formats::features::load_feature_csv;
use crate::formats::manifest::LoadedCorpus;

/// Where feature sequences come from: CSV files under a root directory, or
/// matrices already in memory (synthetic corpora generated on the fly).
#[derive(Debug, Clone)]
pub enum Features {
    Files(PathBuf),
    Memory(BTreeMap<String, Matrix>),
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub corpus: Corpus,
    pub features: Features,
}

impl From<LoadedCorpus> for Dataset {
    fn from(l: LoadedCorpus) -> Self {
        Dataset {
            corpus: l.corpus,
            features: Features::Files(l.root),
        }
    }
}

impl Dataset {
    pub fn frames(&self, utt: &Utterance) -> Result<Matrix> {
        let missing = || emofuse_core::Error::Coverage(format!("utterance {} has no acoustic features", utt.id));
        match &self.features {
            Features::Files(root) => {
                let rel = utt.features.as_ref().ok_or_else(missing)?;
                Ok(load_feature_csv(&root.join(rel), &utt.id)?.frames)
            }
            Features::Memory(map) => Ok(map.get(&utt.id).ok_or_else(missing)?.clone()),
        }
    }

    /// Every utterance's frames, in corpus order.
    pub fn all_frames(&self) -> Result<Vec<Matrix>> {
        self.corpus.utterances.iter().map(|u| self.frames(u)).collect()
    }

    pub fn acoustic_examples(&self, frames: &[Matrix], indices: &[usize]) -> Vec<AcousticExample> {
        indices
            .iter()
            .map(|&i| AcousticExample {
                frames: frames[i].clone(),
                label: self.corpus.utterances[i].label,
            })
            .collect()
    }
}
