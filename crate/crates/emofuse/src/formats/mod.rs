//! On-disk formats. Line-delimited files hold one JSON object per line.

pub mod checkpoint;
pub mod epochs;
pub mod evector_table;
pub mod features;
pub mod manifest;
pub mod scores;
pub mod tables;
