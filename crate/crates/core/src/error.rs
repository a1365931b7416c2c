//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, solvers, and model persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("need at least two categories, got {0}")]
    TooFewCategories(usize),

    #[error("duplicate category {0:?}")]
    DuplicateCategory(String),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("non-finite value{}", context_suffix(.0))]
    NonFinite(Option<String>),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("matrix of {rows}x{cols} entries exceeds the materialization budget of {budget}")]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        budget: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(ctx: &Option<String>) -> String {
    match ctx {
        Some(c) => format!(" in {c}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
