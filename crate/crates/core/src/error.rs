//! Error taxonomy shared by all modules.
//!
//! `Domain` and `Precondition` map to CLI exit code 3, `Numeric` to 4.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematically admissible set; the
    /// message names the violated interval or inequality.
    Domain(String),
    /// A stated hypothesis of the underlying result fails.
    Precondition(String),
    /// Quadrature or root-finding failed to converge; carries the residual.
    Numeric { message: String, residual: f64 },
    /// Not enough derivative/moment data was supplied.
    Arity(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            residual,
        }
    }
    pub fn arity(msg: impl Into<String>) -> Self {
        Error::Arity(msg.into())
    }
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Precondition(m) => write!(f, "precondition violated: {m}"),
            Error::Numeric { message, residual } => {
                write!(f, "numeric error: {message} (residual {residual:e})")
            }
            Error::Arity(m) => write!(f, "insufficient data: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
