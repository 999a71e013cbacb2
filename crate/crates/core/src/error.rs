//! Error type shared across the crate.

use alloc::string::String;
use alloc::vec::Vec;

/// Everything that can go wrong between reading a table and finishing a fit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A required column is absent from the header row.
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    /// A cell failed to parse; `row` counts data rows from 1.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    /// The input had a header but no data rows.
    #[error("input contains no data rows")]
    EmptyInput,
    /// Every center is all-case or all-control, so no AUC is defined.
    #[error("no usable centers: every center is all-case or all-control")]
    UnusableData,
    /// A marker column is constant and cannot be scaled to unit variance.
    #[error("marker column '{0}' is constant; cannot standardize")]
    DegenerateMarker(String),
    /// A coefficient vector does not match the marker dimension.
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// Score lists fed to an AUC must be nonempty.
    #[error("empty score list")]
    EmptyScores,
    /// Score lists fed to an AUC must be finite.
    #[error("non-finite score encountered")]
    NonFiniteScore,
    /// A configuration value failed validation before any compute.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// The logistic design matrix is rank-deficient.
    #[error("singular design matrix in logistic fit")]
    SingularDesign,
    /// An objective or gradient evaluation produced a non-finite value.
    #[error("non-finite {what} at theta = {theta:?}")]
    NonFinite { what: &'static str, theta: Vec<f64> },
    /// Every bootstrap replicate failed to fit.
    #[error("all {0} bootstrap replicates failed")]
    BootstrapFailed(usize),
}
