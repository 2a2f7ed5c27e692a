//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensor kernels, layers, the PolSAR pipeline and sampling.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor extents do not line up for the requested operation.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller violated an operation contract (bad argument, wrong mode, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A scene recipe is invalid (non-PSD covariance, bad proportions, ...).
    #[error("invalid scene recipe: {0}")]
    Recipe(String),

    /// A serialized artifact could not be decoded.
    #[error("format error: {0}")]
    Format(String),

    /// A spatial split left some class absent from one of the strips.
    #[error("split infeasible: class '{class}' missing from the {strip} strip")]
    SplitInfeasible { class: String, strip: &'static str },

    /// A computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Metric is undefined for the given input (e.g. empty confusion matrix).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
