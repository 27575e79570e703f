use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// The mode lattice or a toy system exceeds a configured size budget.
    #[error("sizing error: {0}")]
    Sizing(String),

    /// A truncated sum could not be certified at the requested tolerance.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// Scaled arithmetic left the representable floating-point range.
    #[error("scale error: {0}")]
    Scale(String),

    /// A root bracket could not be established or the solver did not converge.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// A request names modes or moments that cannot be provided.
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    /// A resource cap (memory, iteration count) was exhausted.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
