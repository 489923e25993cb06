use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("invalid sample{}: {reason}", at_row(*row))]
    InvalidSample { row: Option<usize>, reason: String },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("{what} interval [{start_s}, {end_s}) contains no samples")]
    EmptyInterval {
        what: &'static str,
        start_s: f64,
        end_s: f64,
    },

    #[error("window {index} [{start_s}, {end_s}) contains no samples")]
    WindowGap {
        index: usize,
        start_s: f64,
        end_s: f64,
    },

    #[error("series is empty")]
    EmptySeries,

    #[error("manifest {location}: {message}")]
    Manifest { location: String, message: String },

    #[error("session {subject_id}/{task_id}: {source}")]
    Session {
        subject_id: String,
        task_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("duplicate row for subject {subject_id}, task {task_id}")]
    DuplicateRow { subject_id: String, task_id: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular design: column(s) {} are linearly dependent", .columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("degenerate target: {0} has zero variance")]
    DegenerateTarget(String),

    #[error("degenerate column: {0} has zero variance")]
    DegenerateColumn(String),

    #[error("adjusted R^2 undefined for n = {n}, p = {p} (needs n > p + 1)")]
    UndefinedAdjustment { n: usize, p: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid load profile: {0}")]
    InvalidProfile(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn at_row(row: Option<usize>) -> String {
    row.map(|r| format!(" at row {r}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_session(self, subject_id: &str, task_id: &str) -> Self {
        Error::Session {
            subject_id: subject_id.to_owned(),
            task_id: task_id.to_owned(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a filesystem failure rather than bad data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Session { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
