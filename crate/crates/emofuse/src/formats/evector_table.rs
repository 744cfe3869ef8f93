//! Word-weight tables: a header line with the class count, smoothing
//! constant and per-class token totals, then one `{word, weights}` line per
//! word in sorted order.

use std::path::Path;

use emofuse_core::evector::WordWeightTable;
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    num_classes: usize,
    alpha: f64,
    class_totals: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    word: String,
    weights: Vec<f64>,
}

pub fn render_table(table: &WordWeightTable) -> String {
    let mut out = error::to_line(&Header {
        num_classes: table.num_classes(),
        alpha: table.alpha(),
        class_totals: table.class_totals().to_vec(),
    });
    for (word, weights) in table.iter() {
        out.push_str(&error::to_line(&Row {
            word: word.to_string(),
            weights: weights.to_vec(),
        }));
    }
    out
}

pub fn parse_table(path: &Path, text: &str) -> Result<WordWeightTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty weight table", path.display())))?;
    let header: Header = error::parse_line(path, n, first)?;
    let rows = lines
        .map(|(n, l)| error::parse_line::<Row>(path, n, l).map(|r| (r.word, r.weights)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WordWeightTable::from_rows(header.num_classes, header.alpha, header.class_totals, rows)?)
}

pub fn load_table(path: &Path) -> Result<WordWeightTable> {
    parse_table(path, &error::read_to_string(path)?)
}
