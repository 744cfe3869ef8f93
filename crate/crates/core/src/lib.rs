//! Numeric core for utterance-level emotion recognition from transcripts and
//! acoustic frame features.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every model, loss and
//! metric; file formats, the synthetic corpus generator and the command line
//! live in the companion `emofuse` crate.
//!
//! * [`text`]: tokenizer, vocabulary and the multi-resolution CNN whose
//!   parallel convolution modules are mean-pooled into an utterance embedding.
//! * [`objective`]: cross-entropy plus a cosine/sigmoid verification loss over
//!   all pairs of a mini-batch.
//! * [`acoustic`]: stacked LSTMs with global temporal mean pooling.
//! * [`evector`]: averaged per-word class weights.
//! * [`svm`] and [`fusion`]: score concatenation and one-vs-rest linear SVM.
//! * [`corpus`], [`metrics`]: speaker-disjoint folds, balancing, WA/UA.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod acoustic;
pub mod corpus;
pub mod error;
pub mod evector;
pub mod experiment;
pub mod fusion;
pub mod gradcheck;
pub mod layers;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod objective;
pub mod param;
pub mod rng;
pub mod svm;
pub mod text;
pub mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use param::{adam_update, AdamConfig, Parameter};
pub use rng::Rng;
