//! Confusion matrices and the accuracy figures derived from them.
//!
//! WA is the overall fraction correct; UA is the mean of per-class recalls,
//! which does not reward predicting the majority class.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};

/// `K × K` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        let mut cm = Self::new(k);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(shape_err!("confusion row {} has {} entries, expected {}", t, row.len(), k));
            }
            cm.counts[t * k..(t + 1) * k].copy_from_slice(row);
        }
        Ok(cm)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.num_classes;
        if truth >= k || predicted >= k {
            return Err(Error::Index(alloc::format!(
                "class pair ({}, {}) with {} classes",
                truth,
                predicted,
                k
            )));
        }
        self.counts[truth * k + predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        self.counts[truth * self.num_classes..(truth + 1) * self.num_classes]
            .iter()
            .sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.num_classes.max(1)).map(<[u64]>::to_vec).collect()
    }

    /// Elementwise sum; used to pool folds.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(shape_err!(
                "merging {}-class into {}-class confusion",
                other.num_classes,
                self.num_classes
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

pub fn confusion(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(shape_err!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        ));
    }
    let mut cm = ConfusionMatrix::new(num_classes);
    for (&p, &t) in predictions.iter().zip(labels) {
        cm.record(t, p)?;
    }
    Ok(cm)
}

/// Weighted accuracy: trace over total.
pub fn wa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::UndefinedMetric("accuracy of an empty confusion matrix".into()));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// Recall for every class; an empty class row is an error.
pub fn recall_per_class(cm: &ConfusionMatrix) -> Result<Vec<f64>> {
    if cm.total() == 0 {
        return Err(Error::UndefinedMetric("recall of an empty confusion matrix".into()));
    }
    (0..cm.num_classes())
        .map(|c| {
            let row = cm.row_total(c);
            if row == 0 {
                Err(Error::UndefinedMetric(alloc::format!("class {} has no examples", c)))
            } else {
                Ok(cm.get(c, c) as f64 / row as f64)
            }
        })
        .collect()
}

/// Unweighted accuracy: mean per-class recall.
pub fn ua(cm: &ConfusionMatrix) -> Result<f64> {
    let recalls = recall_per_class(cm)?;
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub system: String,
    pub recalls: Vec<f64>,
    pub wa: f64,
    pub ua: f64,
}

impl MetricRow {
    pub fn from_confusion(system: impl Into<String>, cm: &ConfusionMatrix) -> Result<Self> {
        Ok(Self {
            system: system.into(),
            recalls: recall_per_class(cm)?,
            wa: wa(cm)?,
            ua: ua(cm)?,
        })
    }
}
