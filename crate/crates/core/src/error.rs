use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Shapes, modes or indices that do not fit the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("tensor is numerically singular (unfolding condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("breakdown in {method} at iteration {iteration} (residual {residual:.3e})")]
    Breakdown {
        method: &'static str,
        iteration: usize,
        residual: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("capability limit: {0}")]
    Capability(String),

    /// `z` sits on (or numerically next to) a U-eigenvalue of the state tensor.
    #[error("resolvent is singular at z = {re}{im:+}i (condition estimate {condition:.3e})")]
    Pole { re: f64, im: f64, condition: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
