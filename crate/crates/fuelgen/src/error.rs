use thiserror::Error;

/// Errors produced by the generative model, metrics, and calibration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A query point or geometry fell outside the domain.
    #[error("outside domain: {0}")]
    OutsideDomain(String),

    /// Linear algebra failure that jitter escalation could not repair.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Acceptance sampling exhausted its candidate budget.
    #[error(
        "point placement stalled: {accepted}/{requested} points accepted after \
         {candidates} candidates (acceptance rate {rate:.3e})"
    )]
    GenerationStall {
        requested: usize,
        accepted: usize,
        candidates: u64,
        rate: f64,
    },

    /// Malformed input file content.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Inputs that are structurally invalid for an operation.
    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
