//! Layer kernels with hand-written backward passes.
//!
//! Each layer exposes a forward function returning its output plus whatever
//! the backward pass needs, and a backward function that accumulates into the
//! owning [`Parameter`](crate::param::Parameter) gradients and returns the
//! gradient with respect to its input.

pub mod conv1d;
pub mod dense;
pub mod dropout;
pub mod embedding;
pub mod lstm;
pub mod pool;
pub mod softmax;

pub use conv1d::{conv1d_backward, conv1d_forward, Conv1d};
pub use dense::{Activation, Dense, DenseCache};
pub use dropout::{dropout, DropoutMode};
pub use embedding::Embedding;
pub use lstm::{Lstm, LstmCache};
pub use pool::{global_mean_pool_backward, global_mean_pool_forward};
pub use softmax::{softmax, softmax_cross_entropy, CrossEntropy};
