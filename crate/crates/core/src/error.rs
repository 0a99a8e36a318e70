use std::path::PathBuf;

use thiserror::Error;

/// A single rejected row of an option-chain file.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    /// 1-based data row index (the header is row 0).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {tol:e}")]
    Quadrature { achieved: f64, tol: f64 },

    #[error(
        "covariance factorization failed after jitter {jitter:e}; smallest eigenvalue estimate {min_eigenvalue:e}"
    )]
    Factorization { jitter: f64, min_eigenvalue: f64 },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("maturity {0} is not a node of the simulation grid")]
    MaturityNotOnGrid(f64),

    #[error("pricing failed for option {index}: {source}")]
    Pricing {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid rows in {}: {}", path.display(), format_rows(rows))]
    InvalidRows { path: PathBuf, rows: Vec<RowIssue> },

    #[error("malformed chain file {}: {reason}", path.display())]
    MalformedChain { path: PathBuf, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("non-finite objective: {0}")]
    NonFinite(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),
}

fn format_rows(rows: &[RowIssue]) -> String {
    rows.iter()
        .map(|r| format!("row {}: {}", r.row, r.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
