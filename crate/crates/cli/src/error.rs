use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: woldlab_core::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        let path = if path.is_empty() || path == "." { "<root>".to_string() } else { path.to_string() };
        CliError::Config {
            path,
            message: message.into(),
        }
    }

    pub fn numeric(context: impl Into<String>, source: woldlab_core::Error) -> Self {
        CliError::Numeric {
            context: context.into(),
            source,
        }
    }
}
