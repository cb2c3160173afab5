use thiserror::Error;

use crate::detector::ExistenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid header: {0}")]
    Header(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid outcome at row {row}: {value} (expected 0 or 1)")]
    InvalidOutcome { row: usize, value: String },

    #[error("unbalanced or duplicated panel: {0}")]
    Unbalanced(String),

    #[error("no informative individuals: CMLE undefined for every β")]
    NoInformative,

    #[error(
        "alternative set too large: C({periods}, {ones}) exceeds the guard of {guard}; use DP path or raise guard"
    )]
    AlternativeSetTooLarge {
        periods: usize,
        ones: usize,
        guard: u64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("QP did not converge after {iterations} iterations; raise iteration cap")]
    QpNotConverged { iterations: u64 },

    #[error("estimate does not exist (separated)")]
    Separated(Box<ExistenceReport>),

    #[error("rank condition failed")]
    RankDeficient(Box<ExistenceReport>),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// The existence report carried by a gated refusal, if any.
    pub fn report(&self) -> Option<&ExistenceReport> {
        match self {
            Error::Separated(r) | Error::RankDeficient(r) => Some(r),
            _ => None,
        }
    }
}
