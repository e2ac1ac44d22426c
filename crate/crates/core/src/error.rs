use thiserror::Error;

/// Errors produced by the analysis pipeline.
///
/// `Domain` covers invalid inputs (shape mismatches, non-Hermitian
/// Hamiltonians, negative rates). `Structural` signals that a verified
/// operator identity failed beyond tolerance, which usually means the
/// input does not have the structure the caller assumed. `Numerical`
/// flags conditioning problems (defective spectral clusters, failed
/// retries) and `Precondition` names an unmet precondition of an
/// operation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("structural error: {check} (residual {residual:.3e})")]
    Structural { check: String, residual: f64 },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn structural(check: impl Into<String>, residual: f64) -> Self {
        Error::Structural {
            check: check.into(),
            residual,
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
