use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported {kind} schema version {found:?} (supported: {supported})")]
    Version {
        kind: &'static str,
        found: String,
        supported: &'static str,
    },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },

    #[error("degenerate keypoints: front/back coincide with center within {eps} m")]
    DegenerateKeypoints { eps: f64 },

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("missing loss component `{0}`")]
    MissingComponent(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("internal check failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// Errors caused by bad input (files, flags, configs) rather than by a
    /// failure inside the engine.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Version { .. }
                | Error::Config(_)
                | Error::Io(_)
                | Error::Integrity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
