use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    Integrity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("duplicate key {key} at lines {first_line} and {second_line}")]
    Conflict {
        key: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("line {line}: unknown {field} '{value}' (expected one of {expected})")]
    Vocabulary {
        line: usize,
        field: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("line {line}: {what} out of range ({value})")]
    Range {
        line: usize,
        what: &'static str,
        value: f64,
    },

    #[error("reference error: {0}")]
    Reference(String),

    #[error("network is disconnected; island buses {island:?}")]
    Connectivity { island: Vec<u32> },

    #[error("insufficient data for {what}: need {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("power flow diverged after {iterations} iterations (mismatch trace {trace:?})")]
    Diverged { iterations: usize, trace: Vec<f64> },

    #[error("singular Jacobian at pivot {pivot} (bus {bus}, {variable})")]
    SingularJacobian {
        pivot: usize,
        bus: u32,
        variable: &'static str,
    },

    #[error("infeasible dispatch: demand {demand_mw:.3} MW outside generation range [{min_mw:.3}, {max_mw:.3}] MW")]
    InfeasibleDispatch {
        demand_mw: f64,
        min_mw: f64,
        max_mw: f64,
    },

    #[error("no wind-bus selection reaches the penetration band after {attempts} attempts")]
    InfeasibleSelection { attempts: usize },

    #[error("slot {slot}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("integrity error: {path} hash {actual} does not match manifest {expected}")]
    Integrity {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Diverged { .. }
            | Error::SingularJacobian { .. }
            | Error::InfeasibleDispatch { .. }
            | Error::InfeasibleSelection { .. }
            | Error::Degenerate(_) => ErrorKind::Numerical,
            Error::Slot { source, .. } | Error::Stage { source, .. } => source.kind(),
            Error::Integrity { .. } => ErrorKind::Integrity,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
