use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One problem found while reading a CSV file. `row` is the 1-based data row
/// (the header is row 0).
#[derive(Debug, Clone, PartialEq)]
pub struct IngestIssue {
    pub row: usize,
    pub message: String,
}

impl std::fmt::Display for IngestIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {}: {}", self.row, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or insufficient input data.
    #[error("input error: {0}")]
    Input(String),

    #[error("{} ingestion problem(s) in {}: {}", .issues.len(), .path.display(), format_issues(.issues))]
    Ingest {
        path: PathBuf,
        issues: Vec<IngestIssue>,
    },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Training produced a non-finite loss or parameter.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("pre-processing refused: {flagged} of {total} rows flagged (limit {limit:.1}%)")]
    TooManyBadRows {
        flagged: usize,
        total: usize,
        limit: f64,
    },

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("model schema mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },

    #[error("unsupported model file version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u64 },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_issues(issues: &[IngestIssue]) -> String {
    const SHOWN: usize = 10;
    let mut parts: Vec<String> = issues.iter().take(SHOWN).map(|i| i.to_string()).collect();
    if issues.len() > SHOWN {
        parts.push(format!("... and {} more", issues.len() - SHOWN));
    }
    parts.join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input or configuration rather than
    /// an internal failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}
