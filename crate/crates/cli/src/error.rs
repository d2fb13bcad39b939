//! CLI-side errors with a stable machine-parseable kind.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("dependency error: expected artifact {}", .0.display())]
    Dependency(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error("artifact error in {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] pmu_sentinel::Error),

    #[error("i/o error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    /// Short stable tag for the single-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Stage { source, .. } => source.kind(),
            CliError::Dependency(_) => "dependency",
            CliError::Config(_) => "config",
            CliError::Artifact { .. } => "artifact",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "json",
            CliError::Core(core) => match core {
                pmu_sentinel::Error::Parameter(_) => "parameter",
                pmu_sentinel::Error::Shape { .. } => "shape",
                pmu_sentinel::Error::Schema(_) => "schema",
                pmu_sentinel::Error::Parse { .. } => "parse",
                pmu_sentinel::Error::Integrity(_) => "integrity",
                pmu_sentinel::Error::Placement(_) => "placement",
                pmu_sentinel::Error::Alignment(_) => "alignment",
                pmu_sentinel::Error::Numeric(_) => "numeric",
                pmu_sentinel::Error::Io(_) => "io",
                pmu_sentinel::Error::Json(_) => "json",
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}
