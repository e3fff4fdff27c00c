use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("history needs at least {needed} levels, got {got}")]
    ShortHistory { needed: usize, got: usize },

    #[error("negative sample {value} at level {level}")]
    NegativeSample { level: usize, value: f64 },

    #[error("implicit step is singular (diagonal {0})")]
    SingularStep(f64),

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("kernel: {0}")]
    Kernel(String),

    #[error("outside the admissible regime: {0}")]
    Regime(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn require(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
