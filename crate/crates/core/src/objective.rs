//! Combined classification + pairwise verification objective.
//!
//! For a mini-batch of `M` utterances with embeddings `d(A)`, logits and
//! labels, the objective is
//!
//! ```text
//! C = Σ_A Σ_{B≠A} [ H_A + λ·V(A,B) ]
//!   = (M−1)·Σ_A H_A + λ·Σ_A Σ_{B≠A} V(A,B)
//! ```
//!
//! over ordered pairs, where `H_A` is the categorical cross-entropy and
//! `V(A,B)` the binary cross-entropy of `p = sigmoid(cos(d(A), d(B)))`
//! against "same emotion". A batch of one falls back to `C = H_A`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::layers::softmax_cross_entropy;
use crate::math::{dot, norm, sigmoid, softplus};

/// Embeddings with norm below this are treated as having cosine 0 with
/// everything.
pub const ZERO_NORM: f64 = 1e-12;

/// Cosine similarity with the zero-norm fallback of 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na < ZERO_NORM || nb < ZERO_NORM {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// `sigmoid(cos(a, b))`.
pub fn pair_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape_err!("embeddings of {} and {} entries", a.len(), b.len()));
    }
    Ok(sigmoid(cosine(a, b)))
}

/// Binary cross-entropy of [`pair_similarity`] against `same_emotion`.
pub fn verification_loss(a: &[f64], b: &[f64], same_emotion: bool) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape_err!("embeddings of {} and {} entries", a.len(), b.len()));
    }
    Ok(bce_from_cosine(cosine(a, b), same_emotion))
}

/// `−t·ln σ(c) − (1−t)·ln(1−σ(c))`, evaluated through softplus.
fn bce_from_cosine(c: f64, same: bool) -> f64 {
    if same {
        softplus(-c)
    } else {
        softplus(c)
    }
}

/// Adds `scale · ∂cos(a,b)/∂a` into `out`.
fn add_cosine_grad(a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
    let (na, nb) = (norm(a), norm(b));
    if na < ZERO_NORM || nb < ZERO_NORM {
        return;
    }
    let c = dot(a, b) / (na * nb);
    let inv = 1.0 / (na * nb);
    let self_term = c / (na * na);
    for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
        *o += scale * (bi * inv - self_term * ai);
    }
}

/// One utterance's contribution to a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMember {
    pub embedding: Vec<f64>,
    pub label: usize,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    pub members: Vec<BatchMember>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    /// Literal objective `C`, the quantity being optimized.
    pub total: f64,
    /// `C / (M(M−1))` for readable logs (`C` itself when `M = 1`).
    pub normalized: f64,
    pub cross_entropy_sum: f64,
    /// `Σ_A Σ_{B≠A} V(A,B)` over ordered pairs.
    pub verification_sum: f64,
    pub d_embeddings: Vec<Vec<f64>>,
    pub d_logits: Vec<Vec<f64>>,
}

pub fn batch_objective(batch: &PairBatch) -> Result<ObjectiveValue> {
    let members = &batch.members;
    let m = members.len();
    if m == 0 {
        return Err(Error::Precondition("empty mini-batch".into()));
    }
    if !(batch.lambda >= 0.0) {
        return Err(Error::Config(alloc::format!("lambda must be >= 0, got {}", batch.lambda)));
    }
    let dim = members[0].embedding.len();
    if members.iter().any(|mb| mb.embedding.len() != dim) {
        return Err(shape_err!("embeddings in a batch must share one dimension"));
    }

    let ce_weight = if m == 1 { 1.0 } else { (m - 1) as f64 };
    let mut ce_sum = 0.0;
    let mut d_logits = Vec::with_capacity(m);
    for mb in members {
        let ce = softmax_cross_entropy(&mb.logits, mb.label)?;
        ce_sum += ce.loss;
        d_logits.push(ce.grad.into_iter().map(|g| ce_weight * g).collect::<Vec<_>>());
    }

    let mut d_embeddings = vec![vec![0.0; dim]; m];
    let mut ver_sum = 0.0;
    if batch.lambda > 0.0 {
        for a in 0..m {
            for b in a + 1..m {
                let (ea, eb) = (&members[a].embedding, &members[b].embedding);
                let same = members[a].label == members[b].label;
                let c = cosine(ea, eb);
                // V(A,B) and V(B,A) are equal; both ordered pairs are counted.
                ver_sum += 2.0 * bce_from_cosine(c, same);
                let t = if same { 1.0 } else { 0.0 };
                let dv_dc = sigmoid(c) - t;
                let scale = 2.0 * batch.lambda * dv_dc;
                add_cosine_grad(ea, eb, scale, &mut d_embeddings[a]);
                add_cosine_grad(eb, ea, scale, &mut d_embeddings[b]);
            }
        }
    } else {
        for a in 0..m {
            for b in a + 1..m {
                let same = members[a].label == members[b].label;
                ver_sum += 2.0 * bce_from_cosine(cosine(&members[a].embedding, &members[b].embedding), same);
            }
        }
    }

    let total = ce_weight * ce_sum + batch.lambda * ver_sum;
    let normalized = if m == 1 { total } else { total / (m * (m - 1)) as f64 };
    if !total.is_finite() {
        return Err(Error::Numeric(alloc::format!("batch objective is {}", total)));
    }
    Ok(ObjectiveValue {
        total,
        normalized,
        cross_entropy_sum: ce_sum,
        verification_sum: ver_sum,
        d_embeddings,
        d_logits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E: f64 = core::f64::consts::E;

    #[test]
    fn similarity_closed_forms() {
        let a = [0.3, -1.2, 2.0];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pair_similarity(&a, &a).unwrap() - 1.0 / (1.0 + 1.0 / E)).abs() < 1e-15);
        assert!((pair_similarity(&a, &a).unwrap() - 0.731059).abs() < 1e-6);
        assert_eq!(pair_similarity(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert!((pair_similarity(&a, &neg).unwrap() - 0.268941).abs() < 1e-6);
    }

    #[test]
    fn verification_closed_forms() {
        let a = [1.0, 2.0];
        assert!((verification_loss(&[1.0, 0.0], &[0.0, 1.0], true).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((verification_loss(&a, &a, true).unwrap() - 0.313262).abs() < 1e-6);
        assert!((verification_loss(&a, &a, false).unwrap() - 1.313262).abs() < 1e-6);
    }

    #[test]
    fn zero_norm_fallback() {
        assert_eq!(pair_similarity(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert!((verification_loss(&[0.0; 3], &[0.0; 3], true).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn empty_batch() {
        let batch = PairBatch {
            members: Vec::new(),
            lambda: 0.1,
        };
        assert!(batch_objective(&batch).is_err());
    }

    #[test]
    fn single_member_falls_back_to_cross_entropy() {
        let batch = PairBatch {
            members: vec![BatchMember {
                embedding: vec![1.0, 2.0],
                label: 0,
                logits: vec![1.0, 0.0],
            }],
            lambda: 0.5,
        };
        let v = batch_objective(&batch).unwrap();
        assert!((v.total - libm::log1p(libm::exp(-1.0))).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn similarity_symmetric_and_scale_invariant(
            a in proptest::collection::vec(-5.0f64..5.0, 4),
            b in proptest::collection::vec(-5.0f64..5.0, 4),
            alpha in 0.01f64..100.0,
            beta in 0.01f64..100.0,
        ) {
            prop_assume!(norm(&a) > 1e-3 && norm(&b) > 1e-3);
            let p = pair_similarity(&a, &b).unwrap();
            prop_assert_eq!(p, pair_similarity(&b, &a).unwrap());
            let sa: Vec<f64> = a.iter().map(|v| v * alpha).collect();
            let sb: Vec<f64> = b.iter().map(|v| v * beta).collect();
            prop_assert!((pair_similarity(&sa, &sb).unwrap() - p).abs() < 1e-12);
            prop_assert!(p >= 1.0 / (1.0 + E) - 1e-15 && p <= 1.0 / (1.0 + 1.0 / E) + 1e-15);
            for same in [true, false] {
                let v = verification_loss(&a, &b, same).unwrap();
                prop_assert!(v >= 0.0 && v <= 1.32);
                prop_assert_eq!(v, verification_loss(&b, &a, same).unwrap());
            }
        }
    }
}
