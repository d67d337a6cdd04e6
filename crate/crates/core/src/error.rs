use thiserror::Error;

#[derive(Debug, Error)]
pub enum QslError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated at t = {t}: {what}")]
    Invariant { t: f64, what: String },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl QslError {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            QslError::Config(_) | QslError::InvalidInput(_) | QslError::Json(_) => 2,
            QslError::Invariant { .. } => 3,
            QslError::NonConvergence { .. } => 4,
            QslError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, QslError>;
