use std::io;

use thiserror::Error;

/// Error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an argument contract (bad length, range, or flag
    /// combination). Maps to a usage error at the CLI.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed on-disk data: cipher package, PGM image, or hex key.
    #[error("format error: {0}")]
    Format(String),

    /// Every quantized measurement was saturated, so no rows of the sensing
    /// operator survive rejection and reconstruction is impossible.
    #[error("no usable measurements: all quantized samples are saturated")]
    AllSaturated,

    /// The l1 solver produced a non-finite objective.
    #[error("solver failure at iteration {iteration} (objective {objective:e}): {message}")]
    Solver {
        iteration: usize,
        objective: f64,
        message: String,
    },

    /// Known-plaintext collection could not assemble a full-rank plaintext
    /// matrix within its candidate budget.
    #[error("failed to collect {needed} independent plaintexts within {attempts} candidates")]
    Collection { needed: usize, attempts: usize },

    /// The plaintext matrix is too ill-conditioned for a reliable solve.
    #[error("plaintext matrix condition number {cond:e} exceeds {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
