//! Labelled utterances, speaker-disjoint folds and class balancing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub label: usize,
    pub tokens: Vec<String>,
    /// Path of the frame-feature file, when acoustic data exists.
    pub features: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub label_names: Vec<String>,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    /// Validates ids and labels.
    pub fn new(label_names: Vec<String>, utterances: Vec<Utterance>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for u in &utterances {
            if !ids.insert(u.id.as_str()) {
                return Err(Error::Config(alloc::format!("duplicate utterance id {:?}", u.id)));
            }
            if u.label >= label_names.len() {
                return Err(Error::Index(alloc::format!(
                    "utterance {} has label {} of {}",
                    u.id,
                    u.label,
                    label_names.len()
                )));
            }
        }
        Ok(Self {
            label_names,
            utterances,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for u in &self.utterances {
            counts[u.label] += 1;
        }
        counts
    }

    pub fn index_of(&self) -> BTreeMap<&str, usize> {
        self.utterances
            .iter()
            .enumerate()
            .map(|(i, u)| (u.id.as_str(), i))
            .collect()
    }
}

/// Which folds play which role in one evaluation round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRoles {
    pub test: usize,
    pub validation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// `k` speaker-disjoint folds of utterance ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Vec<String>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Round `r` tests on fold `r` and validates on fold `r+1 (mod k)`.
    pub fn roles(&self, round: usize) -> RoundRoles {
        RoundRoles {
            test: round,
            validation: (round + 1) % self.k(),
        }
    }

    pub fn split_of_fold(&self, round: usize, fold: usize) -> Split {
        let roles = self.roles(round);
        if fold == roles.test {
            Split::Test
        } else if fold == roles.validation {
            Split::Validation
        } else {
            Split::Train
        }
    }

    /// Ids in a split of round `r`, in fold order.
    pub fn ids(&self, round: usize, split: Split) -> Vec<&str> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(f, _)| self.split_of_fold(round, *f) == split)
            .flat_map(|(_, ids)| ids.iter().map(String::as_str))
            .collect()
    }

    /// Corpus indices of a split, in fold order.
    pub fn indices(&self, corpus: &Corpus, round: usize, split: Split) -> Result<Vec<usize>> {
        let index = corpus.index_of();
        self.ids(round, split)
            .into_iter()
            .map(|id| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Coverage(alloc::format!("fold id {} is not in the corpus", id)))
            })
            .collect()
    }
}

/// Assigns whole speakers to folds, largest speaker first into the fold
/// holding the fewest utterances. Speakers of equal size are ordered by the
/// seeded shuffle.
pub fn make_folds(corpus: &Corpus, k: usize, rng: &mut Rng) -> Result<FoldPlan> {
    if k < 3 {
        return Err(Error::Config(alloc::format!(
            "need at least 3 folds for disjoint train/validation/test, got {}",
            k
        )));
    }
    let mut by_speaker: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for u in &corpus.utterances {
        by_speaker.entry(u.speaker.as_str()).or_default().push(u.id.as_str());
    }
    if by_speaker.len() < k {
        return Err(Error::Degenerate(alloc::format!(
            "{} speakers cannot fill {} speaker-disjoint folds",
            by_speaker.len(),
            k
        )));
    }
    let mut speakers: Vec<(&str, Vec<&str>)> = by_speaker.into_iter().collect();
    rng.shuffle(&mut speakers);
    speakers.sort_by(|a, b| b.1.len().cmp(&a.1.len()));
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for (_, ids) in speakers {
        let lightest = (0..k).min_by_key(|&f| (folds[f].len(), f)).expect("k > 0");
        folds[lightest].extend(ids.into_iter().map(String::from));
    }
    Ok(FoldPlan { folds })
}

/// Downsamples every class without replacement to the smallest class count.
/// Output keeps corpus order.
pub fn balance_classes(corpus: &Corpus, rng: &mut Rng) -> Result<Corpus> {
    let counts = corpus.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Degenerate(alloc::format!(
            "class {} ({}) is empty",
            c,
            corpus.label_names[c]
        )));
    }
    let target = counts.iter().copied().min().unwrap_or(0);
    let mut keep = vec![false; corpus.len()];
    for class in 0..corpus.num_classes() {
        let mut members: Vec<usize> = corpus
            .utterances
            .iter()
            .enumerate()
            .filter(|(_, u)| u.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() > target {
            rng.shuffle(&mut members);
            members.truncate(target);
        }
        for i in members {
            keep[i] = true;
        }
    }
    let utterances = corpus
        .utterances
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(u, _)| u.clone())
        .collect();
    Ok(Corpus {
        label_names: corpus.label_names.clone(),
        utterances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn corpus(speakers: &[(usize, usize)], k: usize) -> Corpus {
        // (speaker, count) with labels cycling through k classes
        let mut utts = Vec::new();
        for &(s, n) in speakers {
            for j in 0..n {
                utts.push(Utterance {
                    id: format!("s{}_{}", s, j),
                    speaker: format!("spk{}", s),
                    label: j % k,
                    tokens: Vec::new(),
                    features: None,
                });
            }
        }
        Corpus::new((0..k).map(|c| format!("c{}", c)).collect(), utts).unwrap()
    }

    fn speaker_sets(c: &Corpus, plan: &FoldPlan) -> Vec<BTreeSet<String>> {
        let idx = c.index_of();
        plan.folds
            .iter()
            .map(|f| f.iter().map(|id| c.utterances[idx[id.as_str()]].speaker.clone()).collect())
            .collect()
    }

    #[test]
    fn one_speaker_per_fold() {
        let c = corpus(&[(0, 4), (1, 4), (2, 4), (3, 4), (4, 4)], 2);
        let plan = make_folds(&c, 5, &mut Rng::new(0)).unwrap();
        for s in speaker_sets(&c, &plan) {
            assert_eq!(s.len(), 1);
        }
    }

    #[test]
    fn too_few_speakers() {
        let c = corpus(&[(0, 4), (1, 4)], 2);
        assert!(make_folds(&c, 3, &mut Rng::new(0)).is_err());
        assert!(make_folds(&c, 2, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn partition_and_disjointness() {
        let c = corpus(&[(0, 30), (1, 3), (2, 12), (3, 7), (4, 19), (5, 5), (6, 8), (7, 2), (8, 11), (9, 6)], 3);
        let plan = make_folds(&c, 5, &mut Rng::new(9)).unwrap();
        let all: Vec<&String> = plan.folds.iter().flatten().collect();
        assert_eq!(all.len(), c.len());
        let unique: BTreeSet<&String> = all.iter().copied().collect();
        assert_eq!(unique.len(), c.len());
        let sets = speaker_sets(&c, &plan);
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                assert!(sets[a].is_disjoint(&sets[b]));
            }
        }
        for r in 0..5 {
            let tr: BTreeSet<&str> = plan.ids(r, Split::Train).into_iter().collect();
            let va: BTreeSet<&str> = plan.ids(r, Split::Validation).into_iter().collect();
            let te: BTreeSet<&str> = plan.ids(r, Split::Test).into_iter().collect();
            assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
            assert_eq!(tr.len() + va.len() + te.len(), c.len());
        }
    }

    #[test]
    fn balancing_to_minority() {
        let mut utts = Vec::new();
        for (label, n) in [(0usize, 5160usize), (1, 1735), (2, 161_898)] {
            for j in 0..n {
                utts.push(Utterance {
                    id: format!("{}_{}", label, j),
                    speaker: String::from("x"),
                    label,
                    tokens: Vec::new(),
                    features: None,
                });
            }
        }
        let c = Corpus::new(vec!["negative".into(), "positive".into(), "neutral".into()], utts).unwrap();
        let b1 = balance_classes(&c, &mut Rng::new(4)).unwrap();
        assert_eq!(b1.class_counts(), vec![1735, 1735, 1735]);
        let b2 = balance_classes(&c, &mut Rng::new(4)).unwrap();
        assert_eq!(b1, b2);
        let minority: Vec<&Utterance> = c.utterances.iter().filter(|u| u.label == 1).collect();
        let kept: Vec<&Utterance> = b1.utterances.iter().filter(|u| u.label == 1).collect();
        assert_eq!(minority, kept);
    }

    #[test]
    fn balanced_is_unchanged() {
        let c = corpus(&[(0, 6), (1, 6)], 3);
        assert_eq!(balance_classes(&c, &mut Rng::new(1)).unwrap(), c);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let u = Utterance {
            id: "a".into(),
            speaker: "s".into(),
            label: 0,
            tokens: Vec::new(),
            features: None,
        };
        assert!(Corpus::new(vec!["x".into(), "y".into()], vec![u.clone(), u]).is_err());
    }
}
