use std::path::PathBuf;

/// Everything the front-end can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dpim_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {file}, line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("sweep run {value} failed: {source}")]
    Sweep {
        value: String,
        /// The failing point's full config.
        config: Box<serde_json::Value>,
        #[source]
        source: Box<CliError>,
    },
    #[error("report error: {0}")]
    Report(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Parse { .. } => "parse",
            CliError::Sweep { source, .. } => source.kind(),
            CliError::Report(_) => "report",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Machine-readable form written to stderr by the binary.
    pub fn to_json(&self) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "error": { "kind": self.kind(), "message": self.to_string() }
        });
        if let CliError::Sweep { value, config, .. } = self {
            doc["error"]["axis_value"] = serde_json::Value::String(value.clone());
            doc["error"]["config"] = (**config).clone();
        }
        doc
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
