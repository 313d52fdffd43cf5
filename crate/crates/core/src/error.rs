use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside an operation's domain (negative extent, NaN, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A binary container (scene blob, weight file, image) failed validation.
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: u32, reason: String },

    #[error("non-finite gradient rejected at step {step}")]
    NonFiniteGradient { step: u32 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable category name, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Format(_) => "format",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::DimensionMismatch(_) => "dimension",
            Error::Diverged { .. } => "diverged",
            Error::NonFiniteGradient { .. } => "non-finite",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
