use std::io;
use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cavity_core::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config(_) => "InvalidConfig",
            CliError::UnknownPreset(_) => "UnknownPreset",
            CliError::Io { .. } => "Io",
            CliError::Run { source, .. } => source.kind(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Run { index, .. } = self {
            v["run"] = json!(index);
        }
        v
    }
}
