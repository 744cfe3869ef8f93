//! Seeded synthetic corpora with paired transcripts and feature sequences.
//!
//! Each class is mapped to a group per modality; classes sharing a group are
//! indistinguishable in that modality. Text: with probability `text_signal`
//! a token is drawn from its group's private vocabulary, otherwise from the
//! shared pool. Acoustics: every frame is the group's ±1 mean vector scaled
//! by `acoustic_signal` plus unit Gaussian noise.

use std::collections::BTreeSet;
use std::path::Path;

use emofuse_core::corpus::{Corpus, Utterance};
use emofuse_core::text::tokenize;
use emofuse_core::{Matrix, Rng};
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Features};
use crate::error::{self, Error, Result};
use crate::formats::features::render_feature_csv;
use crate::formats::manifest::{render_manifest, ManifestLine};

/// Mean words per utterance of the two reference corpora.
pub const IEMOCAP_MEAN_LENGTH: f64 = 11.56;
pub const CALLCENTER_MEAN_LENGTH: f64 = 6.73;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthPreset {
    Iemocap,
    Callcenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    pub class_counts: Vec<usize>,
    pub speakers: usize,
    /// Speaker `s` receives a share of utterances proportional to `skew^s`.
    #[serde(default = "one")]
    pub speaker_skew: f64,
    pub vocab_size: usize,
    pub text_signal: f64,
    pub acoustic_signal: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_preset: Option<LengthPreset>,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_mean_frames")]
    pub mean_frames: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_groups: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acoustic_groups: Option<Vec<usize>>,
}

fn one() -> f64 {
    1.0
}

fn default_feature_dim() -> usize {
    emofuse_core::acoustic::DEFAULT_FEATURE_DIM
}

fn default_mean_frames() -> f64 {
    30.0
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl SynthSpec {
    /// Balanced separable corpus with `per_class` utterances per class.
    pub fn separable(num_classes: usize, per_class: usize, speakers: usize) -> Self {
        Self {
            num_classes,
            class_names: None,
            class_counts: vec![per_class; num_classes],
            speakers,
            speaker_skew: 1.0,
            vocab_size: 40 * (num_classes + 1),
            text_signal: 1.0,
            acoustic_signal: 1.0,
            mean_length: None,
            length_preset: Some(LengthPreset::Iemocap),
            feature_dim: 8,
            mean_frames: 20.0,
            text_groups: None,
            acoustic_groups: None,
        }
    }

    pub fn mean_length(&self) -> Result<f64> {
        match (self.mean_length, self.length_preset) {
            (Some(m), None) => Ok(m),
            (None, Some(LengthPreset::Iemocap)) => Ok(IEMOCAP_MEAN_LENGTH),
            (None, Some(LengthPreset::Callcenter)) => Ok(CALLCENTER_MEAN_LENGTH),
            (None, None) => Ok(IEMOCAP_MEAN_LENGTH),
            (Some(_), Some(_)) => Err(Error::config("give either mean_length or length_preset, not both")),
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        self.class_names
            .clone()
            .unwrap_or_else(|| (0..self.num_classes).map(|c| format!("class{c}")).collect())
    }

    fn groups(&self, explicit: &Option<Vec<usize>>) -> Vec<usize> {
        explicit.clone().unwrap_or_else(|| (0..self.num_classes).collect())
    }

    fn num_groups(groups: &[usize]) -> usize {
        groups.iter().collect::<BTreeSet<_>>().len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_classes;
        if k < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        if self.class_counts.len() != k || self.class_counts.contains(&0) {
            return Err(Error::config(format!("class_counts needs {k} positive entries")));
        }
        if let Some(names) = &self.class_names {
            if names.len() != k || names.iter().collect::<BTreeSet<_>>().len() != k {
                return Err(Error::config(format!("class_names needs {k} distinct entries")));
            }
        }
        let total: usize = self.class_counts.iter().sum();
        if self.speakers == 0 || self.speakers > total {
            return Err(Error::config(format!("speakers must be in 1..={total}")));
        }
        if !(self.speaker_skew > 0.0 && self.speaker_skew.is_finite()) {
            return Err(Error::config("speaker_skew must be positive"));
        }
        if !in_unit(self.text_signal) || !in_unit(self.acoustic_signal) {
            return Err(Error::config("text_signal and acoustic_signal must lie in [0, 1]"));
        }
        let m = self.mean_length()?;
        if !(m > 0.0 && m.is_finite()) || !(self.mean_frames > 0.0 && self.mean_frames.is_finite()) {
            return Err(Error::config("mean_length and mean_frames must be positive"));
        }
        if self.feature_dim == 0 {
            return Err(Error::config("feature_dim must be positive"));
        }
        for (name, g) in [("text_groups", &self.text_groups), ("acoustic_groups", &self.acoustic_groups)] {
            let groups = self.groups(g);
            let n = Self::num_groups(&groups);
            if groups.len() != k || groups.iter().any(|&x| x >= n) {
                return Err(Error::config(format!("{name} must map each of {k} classes to a group in 0..groups")));
            }
        }
        let text_groups = Self::num_groups(&self.groups(&self.text_groups));
        if self.vocab_size < 2 * (text_groups + 1) {
            return Err(Error::config(format!(
                "vocab_size must be at least {} for {text_groups} text groups",
                2 * (text_groups + 1)
            )));
        }
        let acoustic_groups = Self::num_groups(&self.groups(&self.acoustic_groups));
        if self.feature_dim < 63 && (1u64 << self.feature_dim) < acoustic_groups as u64 {
            return Err(Error::config("feature_dim too small for distinct acoustic means"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUtterance {
    pub id: String,
    pub speaker: String,
    pub label: usize,
    pub transcript: String,
    pub frames: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub spec: SynthSpec,
    pub seed: u64,
    pub labels: Vec<String>,
    pub utterances: Vec<SynthUtterance>,
}

fn poisson_at_least_one(mean: f64, rng: &mut Rng) -> usize {
    let p = Poisson::new(mean).expect("validated positive mean");
    let draw: f64 = p.sample(rng.inner_mut());
    (draw as usize).max(1)
}

/// Speaker quotas by largest remainder, every speaker getting at least one.
fn speaker_quotas(total: usize, speakers: usize, skew: f64) -> Vec<usize> {
    let weights: Vec<f64> = (0..speakers).map(|s| skew.powi(s as i32)).collect();
    let sum: f64 = weights.iter().sum();
    let free = total - speakers;
    let exact: Vec<f64> = weights.iter().map(|w| free as f64 * w / sum).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| 1 + *e as usize).collect();
    let mut left = total - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..speakers).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        quotas[s] += 1;
        left -= 1;
    }
    quotas
}

fn sign_vectors(groups: usize, dim: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(groups);
    while out.len() < groups {
        let v: Vec<f64> = (0..dim).map(|_| if rng.bernoulli(0.5) { 1.0 } else { -1.0 }).collect();
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut root = Rng::new(seed);
    let mut text_rng = root.fork(1);
    let mut audio_rng = root.fork(2);
    let mut speaker_rng = root.fork(3);
    let mut mean_rng = root.fork(4);

    let text_groups = spec.groups(&spec.text_groups);
    let n_text = SynthSpec::num_groups(&text_groups);
    let private = spec.vocab_size / (n_text + 1);
    let shared: Vec<String> = (n_text * private..spec.vocab_size).map(|i| format!("w{i:04}")).collect();
    let group_vocab: Vec<Vec<String>> = (0..n_text)
        .map(|g| (g * private..(g + 1) * private).map(|i| format!("w{i:04}")).collect())
        .collect();
    let acoustic_groups = spec.groups(&spec.acoustic_groups);
    let means = sign_vectors(SynthSpec::num_groups(&acoustic_groups), spec.feature_dim, &mut mean_rng);
    let mean_length = spec.mean_length()?;

    let mut utterances = Vec::new();
    for (class, &count) in spec.class_counts.iter().enumerate() {
        for _ in 0..count {
            let n_tokens = poisson_at_least_one(mean_length, &mut text_rng);
            let words: Vec<&str> = (0..n_tokens)
                .map(|_| {
                    let pool = if text_rng.bernoulli(spec.text_signal) {
                        &group_vocab[text_groups[class]]
                    } else {
                        &shared
                    };
                    pool[text_rng.below(pool.len())].as_str()
                })
                .collect();
            let n_frames = poisson_at_least_one(spec.mean_frames, &mut audio_rng);
            let mu = &means[acoustic_groups[class]];
            let mut frames = Matrix::zeros(n_frames, spec.feature_dim);
            for t in 0..n_frames {
                for (v, m) in frames.row_mut(t).iter_mut().zip(mu) {
                    let noise: f64 = StandardNormal.sample(audio_rng.inner_mut());
                    *v = spec.acoustic_signal * m + noise;
                }
            }
            utterances.push(SynthUtterance {
                id: format!("u{:05}", utterances.len()),
                speaker: String::new(),
                label: class,
                transcript: words.join(" "),
                frames,
            });
        }
    }
    let mut order: Vec<usize> = (0..utterances.len()).collect();
    speaker_rng.shuffle(&mut order);
    let quotas = speaker_quotas(utterances.len(), spec.speakers, spec.speaker_skew);
    let mut next = order.into_iter();
    for (s, q) in quotas.into_iter().enumerate() {
        for i in next.by_ref().take(q) {
            utterances[i].speaker = format!("spk{s:03}");
        }
    }
    Ok(SynthCorpus {
        spec: spec.clone(),
        seed,
        labels: spec.class_names(),
        utterances,
    })
}

#[derive(Serialize)]
struct SpecEcho<'a> {
    seed: u64,
    resolved_mean_length: f64,
    spec: &'a SynthSpec,
}

impl SynthCorpus {
    pub fn feature_file(id: &str) -> String {
        format!("features/{id}.csv")
    }

    pub fn dataset(&self) -> Dataset {
        let utterances = self
            .utterances
            .iter()
            .map(|u| Utterance {
                id: u.id.clone(),
                speaker: u.speaker.clone(),
                label: u.label,
                tokens: tokenize(&u.transcript),
                features: Some(Self::feature_file(&u.id)),
            })
            .collect();
        Dataset {
            corpus: Corpus::new(self.labels.clone(), utterances).expect("generated ids are unique"),
            features: Features::Memory(self.utterances.iter().map(|u| (u.id.clone(), u.frames.clone())).collect()),
        }
    }

    /// Writes `manifest.jsonl`, `features/<id>.csv` and `synth_spec.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let lines: Vec<ManifestLine> = self
            .utterances
            .iter()
            .map(|u| ManifestLine {
                id: u.id.clone(),
                speaker: u.speaker.clone(),
                label: self.labels[u.label].clone(),
                transcript: u.transcript.clone(),
                features: Some(Self::feature_file(&u.id)),
            })
            .collect();
        error::write(&dir.join("manifest.jsonl"), render_manifest(&self.labels, &lines))?;
        for u in &self.utterances {
            error::write(&dir.join(Self::feature_file(&u.id)), render_feature_csv(&u.frames))?;
        }
        let echo = SpecEcho {
            seed: self.seed,
            resolved_mean_length: self.spec.mean_length()?,
            spec: &self.spec,
        };
        let mut s = serde_json::to_string_pretty(&echo).expect("plain data serializes");
        s.push('\n');
        error::write(&dir.join("synth_spec.json"), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotas_cover_total() {
        assert_eq!(speaker_quotas(10, 5, 1.0), vec![2; 5]);
        let q = speaker_quotas(100, 10, 0.7);
        assert_eq!(q.iter().sum::<usize>(), 100);
        assert!(q.iter().all(|&n| n >= 1));
        assert!(q[0] > q[9]);
    }

    #[test]
    fn private_vocabularies_are_disjoint_at_full_signal() {
        let c = synth_corpus(&SynthSpec::separable(3, 30, 6), 5).unwrap();
        let mut by_class = vec![BTreeSet::new(); 3];
        for u in &c.utterances {
            by_class[u.label].extend(tokenize(&u.transcript));
        }
        assert!(by_class[0].is_disjoint(&by_class[1]));
        assert!(by_class[1].is_disjoint(&by_class[2]));
    }

    #[test]
    fn lengths_are_positive() {
        let mut spec = SynthSpec::separable(2, 200, 4);
        spec.mean_length = Some(0.3);
        spec.length_preset = None;
        spec.mean_frames = 0.3;
        let c = synth_corpus(&spec, 1).unwrap();
        assert!(c.utterances.iter().all(|u| !u.transcript.is_empty() && u.frames.rows() >= 1));
    }

    #[test]
    fn bad_specs_are_config_errors() {
        let good = SynthSpec::separable(4, 10, 4);
        let mut cases = Vec::new();
        let mut s = good.clone();
        s.text_signal = 1.5;
        cases.push(s);
        let mut s = good.clone();
        s.class_counts = vec![10; 3];
        cases.push(s);
        let mut s = good.clone();
        s.speakers = 0;
        cases.push(s);
        let mut s = good.clone();
        s.mean_length = Some(3.0);
        cases.push(s);
        let mut s = good.clone();
        s.text_groups = Some(vec![0, 0, 2, 2]);
        cases.push(s);
        let mut s = good;
        s.feature_dim = 1;
        cases.push(s);
        for s in cases {
            assert_eq!(synth_corpus(&s, 0).unwrap_err().class(), "config");
        }
    }
}
