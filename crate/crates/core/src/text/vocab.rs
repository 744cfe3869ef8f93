use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const PAD_INDEX: usize = 0;
pub const OOV_INDEX: usize = 1;

const PAD_TOKEN: &str = "<pad>";
const OOV_TOKEN: &str = "<unk>";

/// Token ↔ index map. Index 0 is padding and index 1 the out-of-vocabulary
/// bucket; real tokens are numbered in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: BTreeMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Builds from training utterances only.
    pub fn build<'a, I, S>(utterances: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut vocab = Self {
            index: BTreeMap::new(),
            tokens: alloc::vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()],
        };
        for utt in utterances {
            for tok in utt {
                let tok = tok.as_ref();
                if !vocab.index.contains_key(tok) {
                    vocab.index.insert(tok.to_string(), vocab.tokens.len());
                    vocab.tokens.push(tok.to_string());
                }
            }
        }
        vocab
    }

    /// Rebuilds from the index→token list, e.g. when loading a checkpoint.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_INDEX] != PAD_TOKEN || tokens[OOV_INDEX] != OOV_TOKEN {
            return Err(Error::Config("vocabulary must start with <pad>, <unk>".into()));
        }
        let mut index = BTreeMap::new();
        for (i, tok) in tokens.iter().enumerate().skip(2) {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::Config(alloc::format!("duplicate vocabulary entry {:?}", tok)));
            }
        }
        Ok(Self { index, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.get(t.as_ref()).unwrap_or(OOV_INDEX))
            .collect()
    }
}
