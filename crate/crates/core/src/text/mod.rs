//! Transcript side: tokenization, vocabulary and the multi-resolution CNN.

mod mcnn;
mod tokenize;
mod vocab;

pub use mcnn::{
    kernel_schedule, KernelPreset, KernelSpec, McnnConfig, McnnForward, McnnModel, EMBED_INIT_SCALE,
};
pub use tokenize::{pad_tokens, tokenize, PaddedTokens};
pub use vocab::{Vocabulary, OOV_INDEX, PAD_INDEX};
