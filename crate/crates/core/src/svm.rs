//! One-vs-rest linear SVM trained by stochastic subgradient descent on the
//! L2-regularized hinge loss.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::math::{argmax, dot};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    /// Trade-off between margin violations and weight norm.
    pub reg_constant: f64,
    pub epochs: usize,
    /// Initial step size; the schedule is `eta0 / (1 + eta0·λ·t)`.
    pub eta0: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            reg_constant: 1.0,
            epochs: 60,
            eta0: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub reg_constant: f64,
}

/// Per-class primal objective after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFitLog {
    pub objectives: Vec<Vec<f64>>,
}

impl LinearSvmModel {
    pub fn num_classes(&self) -> usize {
        self.biases.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn margins(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(shape_err!("feature of {} entries for a {}-dim SVM", x.len(), self.dim()));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }
}

/// Argmax class (lowest index on ties) and the per-class margins.
pub fn svm_predict(model: &LinearSvmModel, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let m = model.margins(x)?;
    Ok((argmax(&m), m))
}

fn primal_objective(w: &[f64], b: f64, lambda: f64, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / xs.len() as f64
}

pub fn svm_fit(
    features: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    cfg: &SvmConfig,
    rng: &mut Rng,
) -> Result<(LinearSvmModel, SvmFitLog)> {
    if features.len() != labels.len() {
        return Err(shape_err!("{} features for {} labels", features.len(), labels.len()));
    }
    if !(cfg.reg_constant > 0.0) || !(cfg.eta0 > 0.0) || cfg.epochs == 0 {
        return Err(Error::Config(alloc::format!("invalid SVM settings {:?}", cfg)));
    }
    if num_classes < 2 {
        return Err(Error::Degenerate("an SVM needs at least two classes".into()));
    }
    let dim = features.first().map_or(0, Vec::len);
    if features.iter().any(|f| f.len() != dim) {
        return Err(shape_err!("SVM features must share one dimension"));
    }
    let mut present = vec![0usize; num_classes];
    for &l in labels {
        if l >= num_classes {
            return Err(Error::Index(alloc::format!("label {} with {} classes", l, num_classes)));
        }
        present[l] += 1;
    }
    if let Some(c) = present.iter().position(|&n| n == 0) {
        return Err(Error::Degenerate(alloc::format!("class {} has no training examples", c)));
    }

    let n = features.len();
    let lambda = 1.0 / (cfg.reg_constant * n as f64);
    let mut weights = vec![vec![0.0; dim]; num_classes];
    let mut biases = vec![0.0; num_classes];
    let targets: Vec<Vec<f64>> = (0..num_classes)
        .map(|c| labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect())
        .collect();
    let mut objectives = vec![Vec::with_capacity(cfg.epochs); num_classes];
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            let eta = cfg.eta0 / (1.0 + cfg.eta0 * lambda * t as f64);
            let x = &features[i];
            for c in 0..num_classes {
                let y = targets[c][i];
                let w = &mut weights[c];
                let margin = y * (dot(w, x) + biases[c]);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (wv, &xv) in w.iter_mut().zip(x) {
                        *wv += eta * y * xv;
                    }
                    biases[c] += eta * y;
                }
            }
            t += 1;
        }
        for c in 0..num_classes {
            objectives[c].push(primal_objective(&weights[c], biases[c], lambda, features, &targets[c]));
        }
    }
    if weights.iter().flatten().chain(&biases).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("SVM weights diverged".into()));
    }
    Ok((
        LinearSvmModel {
            weights,
            biases,
            reg_constant: cfg.reg_constant,
        },
        SvmFitLog { objectives },
    ))
}

/// Fraction of `features` whose prediction matches `labels`.
pub fn svm_accuracy(model: &LinearSvmModel, features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut hits = 0usize;
    for (x, &l) in features.iter().zip(labels) {
        if svm_predict(model, x)?.0 == l {
            hits += 1;
        }
    }
    Ok(hits as f64 / features.len().max(1) as f64)
}

/// Per-dimension z-scoring fitted on training features. Score blocks such
/// as near-uniform posteriors vary over a tiny range, which the
/// subgradient solver would otherwise need many epochs to scale up to.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Constant dimensions keep unit scale and so map to zero.
    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::Degenerate("no training features".into()))?;
        let d = first.len();
        let n = features.len() as f64;
        let mut mean = vec![0.0; d];
        for x in features {
            if x.len() != d {
                return Err(shape_err!("feature of length {} among length {}", x.len(), d));
            }
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for x in features {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = libm::sqrt(v);
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(shape_err!("feature of length {}, standardizer for {}", x.len(), self.mean.len()));
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}
