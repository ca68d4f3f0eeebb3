use std::io;
use std::path::PathBuf;

/// Failures of the file formats and command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("format version mismatch: file has {found}, this build reads {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated payload: header declares {expected} bytes, file holds {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("input not found: {0}")]
    MissingInput(PathBuf),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Core(#[from] c2s_core::Error),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            LabError::MissingInput(path)
        } else {
            LabError::Io { path, source }
        }
    }

    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        use c2s_core::Error as E;
        match self {
            LabError::MissingInput(_) | LabError::Usage(_) | LabError::Parse { .. } => 2,
            LabError::Core(E::Config(_) | E::TrajectoryTooShort { .. } | E::TooFewPositions(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
