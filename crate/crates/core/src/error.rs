use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("non-positive time delta")]
    NonPositiveTimeDelta,

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("trajectory too short")]
    TrajectoryTooShort,

    #[error("coordinate out of range: lat={lat}, lon={lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("mixed user ids in trajectory: expected {expected}, found {found}")]
    MixedUsers { expected: String, found: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no ground truth")]
    NoGroundTruth,

    #[error("link/gt mismatch: gt_id {0}")]
    LinkMismatch(i64),

    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),

    #[error("bad header: expected `{expected}`")]
    BadHeader { expected: &'static str },

    #[error("row {row}: parse error: {msg}")]
    Parse { row: u64, msg: String },

    #[error("row {row}: coordinate out of range")]
    RowCoordinateOutOfRange { row: u64 },

    #[error("row {row}: unknown category `{token}`")]
    UnknownCategory { row: u64, token: String },

    #[error("row {row}: duplicate gt_id {gt_id}")]
    DuplicateGtId { row: u64, gt_id: i64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("user {user}, cell `{cell}`: {source}")]
    Cell {
        user: String,
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("user {0} has ground truth but no trajectory")]
    MissingTrajectory(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
