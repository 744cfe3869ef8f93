//! Result tables: one row per system with per-class recall, WA and UA, as
//! aligned text and as JSON.

use std::fmt::Write as _;

use emofuse_core::experiment::SweepRow;
use emofuse_core::metrics::{ua, wa, ConfusionMatrix, MetricRow};
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    /// Absent when a class has no test utterances in this round.
    #[serde(rename = "UA")]
    pub ua: Option<f64>,
    #[serde(rename = "WA")]
    pub wa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub system: String,
    pub recalls: Vec<f64>,
    #[serde(rename = "WA")]
    pub wa: Option<f64>,
    #[serde(rename = "UA")]
    pub ua: f64,
    pub confusion: Vec<Vec<u64>>,
    pub per_round: Vec<RoundMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsTable {
    pub labels: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl TableRow {
    /// Pooled metrics from `pooled`, plus whatever is defined per round.
    pub fn new(system: &str, pooled: &ConfusionMatrix, per_round: &[ConfusionMatrix], report_wa: bool) -> Result<Self> {
        let m = MetricRow::from_confusion(system, pooled)?;
        Ok(Self {
            system: m.system,
            recalls: m.recalls,
            wa: report_wa.then_some(m.wa),
            ua: m.ua,
            confusion: pooled.rows(),
            per_round: per_round
                .iter()
                .enumerate()
                .map(|(round, cm)| RoundMetrics {
                    round,
                    ua: ua(cm).ok(),
                    wa: if report_wa { wa(cm).ok() } else { None },
                })
                .collect(),
        })
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

impl ResultsTable {
    /// Percentages, columns padded to the widest cell.
    pub fn render_text(&self) -> String {
        let mut header = vec!["system".to_string()];
        header.extend(self.labels.iter().cloned());
        header.push("WA".into());
        header.push("UA".into());
        let mut cells = vec![header];
        for r in &self.rows {
            let mut row = vec![r.system.clone()];
            row.extend(r.recalls.iter().map(|&v| pct(v)));
            row.push(r.wa.map_or("-".into(), pct));
            row.push(pct(r.ua));
            cells.push(row);
        }
        render_aligned(&cells)
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}

pub fn render_aligned(cells: &[Vec<String>]) -> String {
    let cols = cells.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in cells {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                write!(line, "{cell:<w$}", w = widths[c]).unwrap();
            } else {
                write!(line, "  {cell:>w$}", w = widths[c]).unwrap();
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLine {
    pub num_modules: usize,
    pub kernel_sizes: Vec<usize>,
    #[serde(rename = "UA")]
    pub ua: f64,
    #[serde(rename = "WA")]
    pub wa: f64,
}

impl From<&SweepRow> for SweepLine {
    fn from(r: &SweepRow) -> Self {
        Self {
            num_modules: r.num_modules,
            kernel_sizes: r.kernel_sizes.clone(),
            ua: r.ua,
            wa: r.wa,
        }
    }
}

pub fn render_sweep_text(rows: &[SweepLine]) -> String {
    let mut cells = vec![vec!["modules".to_string(), "kernels".into(), "WA".into(), "UA".into()]];
    for r in rows {
        let kernels: Vec<String> = r.kernel_sizes.iter().map(usize::to_string).collect();
        cells.push(vec![r.num_modules.to_string(), kernels.join(","), pct(r.wa), pct(r.ua)]);
    }
    render_aligned(&cells)
}

pub fn render_sweep_json(rows: &[SweepLine]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("plain data serializes");
    s.push('\n');
    s
}
