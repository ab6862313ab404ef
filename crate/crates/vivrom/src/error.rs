use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum VivError {
    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("file format error in {path}: {msg}")]
    Format { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, VivError>;

impl VivError {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            VivError::Config(_) | VivError::Format { .. } => 2,
            VivError::Numerics(_) | VivError::Solver(_) => 3,
            _ => 1,
        }
    }
}
