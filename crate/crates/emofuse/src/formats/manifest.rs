use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emofuse_core::corpus::{Corpus, Utterance};
use emofuse_core::text::tokenize;
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLine {
    pub id: String,
    pub speaker: String,
    pub label: String,
    pub transcript: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
}

/// A corpus whose feature references are resolved against the manifest's
/// directory.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub root: PathBuf,
}

impl LoadedCorpus {
    pub fn feature_path(&self, utt: &Utterance) -> Option<PathBuf> {
        utt.features.as_ref().map(|f| self.root.join(f))
    }
}

/// First line `{"labels": [...]}`, then one utterance per line.
pub fn load_manifest(path: &Path) -> Result<LoadedCorpus> {
    let text = error::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty manifest", path.display())))?;
    let header: Header = error::parse_line(path, n, first)?;
    let label_index: BTreeMap<&str, usize> = header.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if label_index.len() != header.labels.len() {
        return Err(Error::Format(format!("{}: duplicate label name in header", path.display())));
    }
    let mut seen = BTreeMap::new();
    let mut utterances = Vec::new();
    for (n, line) in lines {
        let rec: ManifestLine = error::parse_line(path, n, line)?;
        let label = *label_index.get(rec.label.as_str()).ok_or_else(|| {
            Error::Format(format!("{}:{}: unknown label {:?}", path.display(), n + 1, rec.label))
        })?;
        if let Some(prev) = seen.insert(rec.id.clone(), n) {
            return Err(Error::Format(format!(
                "{}:{}: duplicate id {:?} (first on line {})",
                path.display(),
                n + 1,
                rec.id,
                prev + 1
            )));
        }
        utterances.push(Utterance {
            id: rec.id,
            speaker: rec.speaker,
            label,
            tokens: tokenize(&rec.transcript),
            features: rec.features,
        });
    }
    let corpus = Corpus::new(header.labels, utterances)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedCorpus { corpus, root })
}

pub fn render_manifest(labels: &[String], lines: &[ManifestLine]) -> String {
    let mut out = error::to_line(&Header {
        labels: labels.to_vec(),
    });
    for l in lines {
        out.push_str(&error::to_line(l));
    }
    out
}
