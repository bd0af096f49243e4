use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("unknown config or preset `{0}` (see `topamp list-presets`)")]
    NotFound(String),
    #[error("{task}: {source}")]
    Numerical {
        task: &'static str,
        #[source]
        source: topamp::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn schema(path: &str, msg: &str) -> Self {
        CliError::Schema { path: path.to_string(), msg: msg.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::NotFound(_) => 2,
            CliError::Numerical { source: topamp::Error::Config(_), .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}
