use std::path::PathBuf;

use crate::solver::SolverState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("could not draw {k} frequencies with spacing {min_spacing} rad after {rounds} rounds")]
    InfeasibleSpacing {
        k: usize,
        min_spacing: f64,
        rounds: usize,
    },

    #[error("sample index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// The regularized Gram solve did not reproduce the measurements.
    #[error("ill-conditioned weighted system (relative residual {residual_rel:e})")]
    IllConditioned {
        residual_rel: f64,
        /// Last feasible iterate, when the failure happened inside a run.
        state: Option<Box<SolverState>>,
    },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
