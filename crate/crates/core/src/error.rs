use thiserror::Error;

/// Errors raised by the lattice filter and its supporting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {what} at t = {t}")]
    NonFinite { what: &'static str, t: usize },

    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("stage {stage}: {reason}")]
    Stage { stage: usize, reason: String },

    #[error("infinite spectral density at t = {t}, frequency index {l}")]
    InfiniteCell { t: usize, l: usize },

    #[error("simulation diverged at t = {t} (|x| = {value:e})")]
    Diverged { t: usize, value: f64 },
}

impl BlfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, BlfError>;
