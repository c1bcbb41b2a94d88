use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A dual variable lies outside its ball `||z_ij|| <= gamma * w_ij`.
    #[error("dual variable on edge {edge} violates its ball by {excess:e}")]
    DualInfeasible { edge: usize, excess: f64 },

    #[error("non-finite iterate at iteration {iteration}: {what}")]
    NumericalFailure { iteration: usize, what: String },

    #[error("matrix factorization failed at pivot {pivot}")]
    Factorization { pivot: usize },

    /// Clusters fused at `gamma_before` were found split again at `gamma_after`.
    #[error("non-monotone fusion between gamma={gamma_before} and gamma={gamma_after}")]
    NonMonotoneFusion { gamma_before: f64, gamma_after: f64 },

    #[error("majorization-minimization objective increased by {increase:e} at outer iteration {iteration}")]
    MmViolation { iteration: usize, increase: f64 },

    #[error("path truncated at gamma={gamma}: {source}")]
    PathTruncated {
        gamma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidData(_) => "invalid_data",
            Error::DualInfeasible { .. } => "dual_infeasible",
            Error::NumericalFailure { .. } => "numerical_failure",
            Error::Factorization { .. } => "factorization",
            Error::NonMonotoneFusion { .. } => "non_monotone_fusion",
            Error::MmViolation { .. } => "mm_violation",
            Error::PathTruncated { .. } => "path_truncated",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
