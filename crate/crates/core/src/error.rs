use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("rotation matrix is degenerate (det = {det})")]
    DegenerateRotation { det: f64 },

    #[error("matrix is not a valid rotation: {reason}")]
    InvalidRotation { reason: String },

    #[error("integration produced a non-finite state")]
    NonFiniteState,

    #[error("quadratic program is infeasible (max violation {max_violation:e})")]
    Infeasible { max_violation: f64 },

    #[error("active set {indices:?} has linearly dependent constraint gradients")]
    RankDeficientActiveSet { indices: Vec<usize> },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("reference trajectory: {0}")]
    Trajectory(String),

    #[error("config line {line}: key `{key}`: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::sync::Arc<std::io::Error>,
    },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source: std::sync::Arc::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
