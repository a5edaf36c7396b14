//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A computation would overflow f64.
    #[error("overflow in {op}: {msg}")]
    Overflow { op: &'static str, msg: String },

    /// An iterative procedure exhausted its budget without converging.
    #[error("{op} did not converge: {msg}")]
    NotConverged { op: &'static str, msg: String },

    /// A user-supplied function returned a non-finite value.
    #[error("non-finite evaluation in {op}: {msg}")]
    Evaluation { op: &'static str, msg: String },

    /// Inconsistent shapes or mismatched grids/rules.
    #[error("mismatch in {op}: {msg}")]
    Mismatch { op: &'static str, msg: String },

    /// Configuration rejected; one message per offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }
    pub fn overflow(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Overflow { op, msg: msg.into() }
    }
    pub fn not_converged(op: &'static str, msg: impl Into<String>) -> Self {
        Error::NotConverged { op, msg: msg.into() }
    }
    pub fn evaluation(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Evaluation { op, msg: msg.into() }
    }
    pub fn mismatch(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Mismatch { op, msg: msg.into() }
    }

    /// Exit-code category used by the CLI: 1 config, 2 numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}
