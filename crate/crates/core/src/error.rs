use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    /// A model parameter violates its domain (sign, range or coprimality).
    #[error("invalid parameters: {0}")]
    Params(String),

    /// An argument lies outside the domain of the requested map.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point expected on the boundary of the cross-shaped region is not there.
    #[error("classification error: {0}")]
    Classification(String),

    /// An entry point on the stable wall never exits the region.
    #[error("entry point on the stable wall never exits")]
    NeverExits,

    /// Inconsistent run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A grid was too coarse to certify a constant; retry with `suggested` points.
    #[error("grid too coarse to certify constants, retry with at least {suggested} points")]
    Resolution { suggested: usize },

    /// The requested quantity is undefined for these parameters (e.g. n = 1).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Structurally inconsistent input data.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
