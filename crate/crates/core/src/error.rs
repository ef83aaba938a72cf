use thiserror::Error;

/// Errors returned by the library. The CLI maps `Io` and `Format` to exit
/// code 3 and everything else to exit code 2.
#[derive(Debug, Error)]
pub enum CrtError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed data file at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CrtError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CrtError::InvalidArgument(msg.into()))
}

pub(crate) fn bad_grid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CrtError::Grid(msg.into()))
}
