//! E-vector baseline.
//!
//! Each training word gets a smoothed class posterior
//! `w(word, c) = (count(word, c) + α) / (count(word) + α·D)`, and an
//! utterance's e-vector is the mean of its words' vectors. Unknown words and
//! empty utterances contribute the uniform vector `1/D`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WordWeightTable {
    num_classes: usize,
    alpha: f64,
    weights: BTreeMap<String, Vec<f64>>,
    /// Token count per class over the training utterances.
    class_totals: Vec<u64>,
}

impl WordWeightTable {
    /// Fits from `(tokens, label)` pairs drawn from training folds.
    pub fn fit<'a, I, S>(utterances: I, num_classes: usize, alpha: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [S], usize)>,
        S: AsRef<str> + 'a,
    {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(alloc::format!("smoothing constant must be > 0, got {}", alpha)));
        }
        if num_classes < 2 {
            return Err(Error::Config("at least two classes required".into()));
        }
        let mut counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        let mut class_totals = vec![0u64; num_classes];
        let mut seen = 0usize;
        for (tokens, label) in utterances {
            if label >= num_classes {
                return Err(Error::Index(alloc::format!("label {} with {} classes", label, num_classes)));
            }
            seen += 1;
            for tok in tokens {
                let row = counts
                    .entry(tok.as_ref().to_string())
                    .or_insert_with(|| vec![0; num_classes]);
                row[label] += 1;
                class_totals[label] += 1;
            }
        }
        if seen == 0 {
            return Err(Error::Degenerate("empty training set".into()));
        }
        let d = num_classes as f64;
        let weights = counts
            .into_iter()
            .map(|(word, row)| {
                let total: u64 = row.iter().sum();
                let denom = total as f64 + alpha * d;
                let w = row.iter().map(|&c| (c as f64 + alpha) / denom).collect();
                (word, w)
            })
            .collect();
        Ok(Self {
            num_classes,
            alpha,
            weights,
            class_totals,
        })
    }

    /// Reassembles a stored table.
    pub fn from_rows(
        num_classes: usize,
        alpha: f64,
        class_totals: Vec<u64>,
        rows: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        if class_totals.len() != num_classes {
            return Err(shape_err!("{} class totals for {} classes", class_totals.len(), num_classes));
        }
        let mut weights = BTreeMap::new();
        for (word, w) in rows {
            if w.len() != num_classes {
                return Err(shape_err!("word {:?} has {} weights, expected {}", word, w.len(), num_classes));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Numeric(alloc::format!("invalid weights for {:?}", word)));
            }
            weights.insert(word, w);
        }
        Ok(Self {
            num_classes,
            alpha,
            weights,
            class_totals,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.weights.get(word).map(Vec::as_slice)
    }

    /// Rows in word order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.weights.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }

    pub fn class_totals(&self) -> &[u64] {
        &self.class_totals
    }

    /// Mean of the words' weight vectors.
    pub fn evector<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let d = self.num_classes;
        let uniform = 1.0 / d as f64;
        if tokens.is_empty() {
            return vec![uniform; d];
        }
        let mut sum = vec![0.0; d];
        for tok in tokens {
            match self.weights.get(tok.as_ref()) {
                Some(w) => sum.iter_mut().zip(w).for_each(|(s, v)| *s += v),
                None => sum.iter_mut().for_each(|s| *s += uniform),
            }
        }
        let n = tokens.len() as f64;
        sum.into_iter().map(|s| s / n).collect()
    }
}

/// Free-function form of [`WordWeightTable::evector`].
pub fn evector<S: AsRef<str>>(tokens: &[S], table: &WordWeightTable) -> Vec<f64> {
    table.evector(tokens)
}
