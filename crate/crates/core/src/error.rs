use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed header, magic or record.
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Payload shorter than the header promised.
    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Image too small for the requested crop.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Feature dimensions or sources that do not line up.
    #[error("shape error: {0}")]
    Shape(String),
    #[error("training error: {0}")]
    Training(String),
    /// Score outside [0, 1].
    #[error("domain error: {0}")]
    Domain(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
