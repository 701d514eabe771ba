use thiserror::Error;

/// Failure to apply a single edit to a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("edit at offset {index} (length {len}) is out of bounds for a snapshot of {snapshot_len} code points")]
    OutOfBounds {
        index: usize,
        len: usize,
        snapshot_len: usize,
    },
    #[error("deleted text {expected:?} does not match snapshot text {found:?}")]
    DeleteMismatch { expected: String, found: String },
}

/// Errors raised while reading a keystroke log.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: order {order} does not strictly increase within file {file_id:?}")]
    NonMonotonicOrder {
        row: usize,
        order: i64,
        file_id: String,
    },
    #[error("row {row}: deleted text {expected:?} disagrees with replayed snapshot text {found:?}")]
    DeleteMismatch {
        row: usize,
        expected: String,
        found: String,
    },
    #[error("row {row}: {source}")]
    Edit { row: usize, source: EditError },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrespondenceError {
    #[error("no correspondence array for state {state}")]
    MissingArray { state: usize },
    #[error("offset {index} out of bounds for state {state} (length {len})")]
    OutOfBounds {
        index: usize,
        state: usize,
        len: usize,
    },
    #[error("cannot chain from state {from} to state {to}: target must be earlier")]
    BadDirection { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("grammar adapter {adapter} failed internally: {message}")]
    Internal { adapter: String, message: String },
    #[error("unknown grammar {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrackingError {
    #[error("no node with uid {uid} at state {state}")]
    UnknownNode { state: usize, uid: u64 },
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown plot kind {0:?}")]
    UnknownPlotKind(String),
    #[error("no sessions found in input")]
    NoSessions,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("session {session}: {source}")]
    Analysis { session: String, source: AnalysisError },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Failures while running the per-session pipeline.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}
