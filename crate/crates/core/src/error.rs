use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("image codec error for {path}: {message}")]
    Codec { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name for the error class, used in machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimensions(_) => "invalid_dimensions",
            Error::NonFinite(_) => "non_finite",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Degenerate(_) => "degenerate",
            Error::Parse { .. } => "parse",
            Error::Codec { .. } => "codec",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}
