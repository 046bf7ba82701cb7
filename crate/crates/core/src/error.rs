use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("minimal geodesic is not unique (antipodal points)")]
    NonUniqueGeodesic,

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The inner solver hit its iteration cap. Carries the best iterate seen.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<S: Into<String>>(msg: S) -> Error {
    Error::InvalidArgument(msg.into())
}
