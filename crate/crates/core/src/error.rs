use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The spectral density is evaluated exactly at one of its poles.
    #[error("spectral pole at omega = {omega}")]
    Pole { omega: f64 },

    /// An iterative computation ran out of its iteration budget.
    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },

    /// The model parameters violate the validity region of their family.
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
