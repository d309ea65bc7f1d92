use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector norm below 1e-12, direction undefined")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample has (near) zero standard deviation")]
    DegenerateSample,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("image id sets differ: {0}")]
    IdMismatch(String),
    #[error("could not place scene centers with the requested separation after {0} attempts")]
    SeparationInfeasible(usize),
    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("slice {index}: {source}")]
    Slice {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("ensemble run eps={eps}, min_pts={min_pts}: {source}")]
    GridPoint {
        eps: f64,
        min_pts: usize,
        #[source]
        source: Box<Error>,
    },
    /// `line` is 1-based; 0 means the whole file.
    #[error("{}: {msg}", location(path, *line))]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(path: &str, line: usize) -> String {
    if line == 0 {
        path.to_string()
    } else {
        format!("{path}:{line}")
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl AsRef<std::path::Path>,
        line: usize,
        msg: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}
