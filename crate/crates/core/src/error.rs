use alloc::string::String;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty sequence: {0}")]
    EmptySequence(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("missing coverage: {0}")]
    Coverage(String),
}

impl Error {
    /// Stable, machine-parsable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::EmptySequence(_) => "empty-sequence",
            Error::Index(_) => "index",
            Error::Numeric(_) => "numeric",
            Error::Degenerate(_) => "degenerate-data",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::Coverage(_) => "coverage",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! shape_err {
    ($($arg:tt)*) => { $crate::error::Error::Shape(alloc::format!($($arg)*)) };
}
pub(crate) use shape_err;
