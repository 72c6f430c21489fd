use thiserror::Error;

/// Errors raised by the simulation engine and its analytic layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("degenerate steady state: null space has dimension {0}, expected 1")]
    DegenerateSteadyState(usize),

    #[error("closed-form steady state outside its domain of validity: {0}")]
    OutsideValidity(String),

    #[error("state is pure (det = {0:e}); use the pure-state QFI formula")]
    PureState(f64),

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("gradient descent diverged at learning rate {eta:e}: cost {cost:e} exceeds 10x initial {initial:e}")]
    Divergence { eta: f64, cost: f64, initial: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
