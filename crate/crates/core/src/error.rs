use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("unsupported dimension {k} for {family} topology: {reason}")]
    UnsupportedDimension {
        family: &'static str,
        k: usize,
        reason: &'static str,
    },

    #[error("mixing matrix violates the spectral-gap assumption: {0}")]
    ViolatesAssumption(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {index} out of range 1..={n}")]
    InvalidNode { index: usize, n: usize },

    #[error("shape mismatch: {0}")]
    InvalidShape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no feasible step size: every run diverged")]
    NoFeasibleStepSize,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
