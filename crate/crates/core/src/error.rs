use thiserror::Error;

/// Errors produced by the simulation kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested case is not covered by the implemented formula.
    #[error("unsupported case: {0}")]
    Unsupported(String),
    /// A configured resource cap (degree, nodes, dimension) would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// A numerical routine failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
