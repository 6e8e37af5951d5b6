use thiserror::Error;

use crate::geometry::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The cone condition failed; carries the first failing sample.
    #[error("cone condition fails at {witness:?}")]
    ConeCondition { witness: Point },

    #[error("snapping error: {0}")]
    Snapping(String),

    #[error("unsupported geometry: {0}")]
    Unsupported(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    /// Iterative solver did not reach its tolerance. The last iterate is kept so
    /// callers can inspect or restart from it.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    IterationLimit {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("n = {n}: {source}")]
    AtIndex {
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Domain(_) => "domain",
            Error::ConeCondition { .. } => "cone_condition",
            Error::Snapping(_) => "snapping",
            Error::Unsupported(_) => "unsupported",
            Error::Resolution(_) => "resolution",
            Error::IterationLimit { .. } => "iteration_limit",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::AtIndex { source, .. } => source.kind(),
        }
    }

    /// True for numerical non-convergence, possibly wrapped with an index.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::IterationLimit { .. } => true,
            Error::AtIndex { source, .. } => source.is_non_convergence(),
            _ => false,
        }
    }

    pub(crate) fn at(n: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtIndex {
            n,
            source: Box::new(e),
        }
    }
}
