use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The matrix is (numerically) singular, e.g. a system sitting exactly at a transition.
    #[error("singular system: {0}")]
    Singular(String),

    #[error("numerical failure: {msg}{}", .dump.as_ref().map(|p| format!(" (matrix dumped to {})", p.display())).unwrap_or_default())]
    Numerical { msg: String, dump: Option<PathBuf> },

    #[error("frequency {omega} is not inside gap {gap}: {detail}")]
    NotInGap { gap: usize, omega: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
