use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^dag| = {deviation:.3e}")]
    NonHermitian { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("invalid gate parameters for `{gate}`: {reason}")]
    InvalidGateParams { gate: String, reason: String },

    #[error("invalid time: {0}")]
    InvalidTime(String),

    #[error("invalid probability {value} for {what}")]
    InvalidProbability { what: String, value: f64 },

    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),

    #[error("incomplete measurement grid: {0}")]
    IncompleteGrid(String),

    #[error("missing tomography input {0}")]
    MissingInput(String),

    #[error("clipped process matrix has vanishing trace {0:.3e}")]
    ZeroTrace(f64),

    #[error("invalid measurement triad: {0}")]
    TriadInvalid(String),

    #[error("setting index {0} out of range 1..=3")]
    IndexOutOfRange(usize),

    #[error("process matrix is not physical: {0}")]
    NonPhysicalInput(String),

    #[error("solver failure ({status}): {detail}")]
    SolverFailure { status: String, detail: String },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("record `{record}` has {total} counts but declares {shots} shots")]
    ShotMismatch { record: String, total: u64, shots: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nothing to export")]
    EmptyExport,

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
