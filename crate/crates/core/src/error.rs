use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: parse error: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("polygon {polygon} is not counter-clockwise (signed area {area:e})")]
    Orientation { polygon: usize, area: f64 },

    #[error("polygon {polygon} is not simple: {msg}")]
    NotSimple { polygon: usize, msg: String },

    #[error("polygon {polygon} is not star-shaped (empty kernel)")]
    NotStarShaped { polygon: usize },

    #[error("non-conforming tiling: {0}")]
    Tiling(String),

    #[error("duplicate vertices {a} and {b}")]
    DuplicateVertices { a: usize, b: usize },

    #[error("degenerate mesh: {0}")]
    Degenerate(String),

    #[error("singular local DOF matrix on triangle {triangle} (condition number {cond:e})")]
    SingularLocal { triangle: usize, cond: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
