use std::fmt::Write as _;
use std::path::Path;

use emofuse_core::acoustic::FeatureSequence;
use emofuse_core::Matrix;

use crate::error::{self, Error, Result};

/// One frame per row, comma-separated, uniform width.
pub fn parse_feature_csv(text: &str, utterance_id: &str) -> Result<FeatureSequence> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for cell in line.split(',') {
            let cell = cell.trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Format(format!("{utterance_id}: row {}: not a number: {cell:?}", n + 1)))?;
            if !v.is_finite() {
                return Err(emofuse_core::Error::Numeric(format!("{utterance_id}: row {}: non-finite value {cell}", n + 1)).into());
            }
            values.push(v);
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(d) if d != w => {
                return Err(Error::Format(format!(
                    "{utterance_id}: row {} has {w} columns, expected {d}",
                    n + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let Some(d) = width else {
        return Err(emofuse_core::Error::EmptySequence(format!("{utterance_id}: feature file has no frames")).into());
    };
    Ok(FeatureSequence::new(utterance_id, Matrix::from_vec(rows, d, values)?)?)
}

pub fn load_feature_csv(path: &Path, utterance_id: &str) -> Result<FeatureSequence> {
    parse_feature_csv(&error::read_to_string(path)?, utterance_id)
}

/// Shortest representation that parses back to the same bits.
pub fn render_feature_csv(frames: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..frames.rows() {
        for (j, v) in frames.row(r).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
