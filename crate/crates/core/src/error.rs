use alloc::string::String;

/// Error kinds shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("placement error: {0}")]
    Placement(String),
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    /// Short machine-readable tag, used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::Placement(_) => "placement",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
