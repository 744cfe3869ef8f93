use emofuse_core::training::EpochRecord;
use serde::{Deserialize, Serialize};

use crate::error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLine {
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_loss_normalized: f64,
    #[serde(rename = "val_UA")]
    pub val_ua: f64,
    #[serde(rename = "val_WA")]
    pub val_wa: f64,
}

impl EpochLine {
    pub fn new(round: usize, lambda: Option<f64>, r: &EpochRecord) -> Self {
        Self {
            round,
            lambda,
            epoch: r.epoch,
            train_loss: r.train_loss,
            train_loss_normalized: r.train_loss_normalized,
            val_ua: r.val_ua,
            val_wa: r.val_wa,
        }
    }
}

pub fn render_epochs(lines: &[EpochLine]) -> String {
    lines.iter().map(error::to_line).collect()
}
