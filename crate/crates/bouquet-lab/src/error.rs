use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("floating overflow: exponent {exponent} exceeds the representable range")]
    Overflow { exponent: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("point lies on a strip boundary (Im z = {im})")]
    Boundary { im: f64 },

    #[error("no sign change of the ray restriction on r in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("Newton iteration diverged")]
    NewtonDivergence,

    #[error("a zero of f lies within {distance:e} of the contour")]
    ZeroOnContour { distance: f64 },

    #[error("winding sum {value} is not close to an integer")]
    NonIntegerWinding { value: f64 },

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("branch violation: {0}")]
    BranchViolation(String),

    #[error("coverage violation: {0}")]
    CoverageViolation(String),

    #[error("base radius {r} is too small: M(R) <= R")]
    RTooSmall { r: f64 },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("several sign changes of the derivative on r in [{lo}, {hi}]")]
    MultipleSignChanges { lo: f64, hi: f64 },

    #[error("no critical point found on r in [{lo}, {hi}]")]
    NoneFound { lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
