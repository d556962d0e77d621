use thiserror::Error;

/// Errors shared by the numerical modules.
///
/// Config parsing and I/O have their own error type in [`crate::harness`].
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix did not match the ambient dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation required an invertible design but the unregularized
    /// Gram matrix is rank deficient.
    #[error("singular design: rank {rank} < dim {dim} with lambda = 0")]
    SingularDesign { rank: usize, dim: usize },

    /// A scalar parameter was outside its admissible range.
    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// A dimension-like count was invalid (e.g. `dim = 0`).
    #[error("invalid size {name} = {value}: {requirement}")]
    InvalidSize {
        name: &'static str,
        value: usize,
        requirement: &'static str,
    },

    /// An action set or sample batch was empty where at least one
    /// element is required.
    #[error("empty {what}")]
    Empty { what: &'static str },

    /// Mismatched lengths between paired inputs (features vs labels).
    #[error("length mismatch: {left_name} has {left}, {right_name} has {right}")]
    LengthMismatch {
        left_name: &'static str,
        left: usize,
        right_name: &'static str,
        right: usize,
    },
}

impl Error {
    pub(crate) fn bad_param(name: &'static str, value: f64, requirement: &'static str) -> Self {
        Error::InvalidParam {
            name,
            value,
            requirement,
        }
    }
}
