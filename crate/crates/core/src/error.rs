use thiserror::Error;

use crate::types::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input failed validation; carries every violation found.
    #[error("invalid input: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `-log det` evaluated outside its domain.
    #[error("matrix for instance {instance} is not positive definite")]
    NotPositiveDefinite { instance: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// No grid point converged during model selection.
    #[error("model selection failed: none of the {evaluated} grid points converged")]
    Selection {
        evaluated: usize,
        entries: Vec<crate::selection::GridEntry>,
    },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
