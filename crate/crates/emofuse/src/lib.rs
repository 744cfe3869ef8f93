//! File formats, synthetic corpora, experiment pipelines and the command
//! line for `emofuse-core`.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
