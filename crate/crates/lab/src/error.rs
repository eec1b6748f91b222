use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// The configuration does not parse or names something unknown.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: disloc_core::Error,
    },
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{} of {total} criteria failed: {}", failed.len(), failed.join(", "))]
    SuiteFailed { failed: Vec<String>, total: usize },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

impl LabError {
    pub fn core(context: &'static str) -> impl FnOnce(disloc_core::Error) -> LabError {
        move |source| LabError::Core { context, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }

    /// 2 for anything caught before the computation, 3 for solver
    /// breakdowns, 1 for IO problems and failed suites.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Json(_) => EXIT_VALIDATION,
            LabError::Core { source, .. } if source.is_validation() => EXIT_VALIDATION,
            LabError::Core { .. } => EXIT_SOLVER,
            LabError::Io { .. } | LabError::Csv { .. } | LabError::SuiteFailed { .. } => {
                EXIT_FAILURE
            }
        }
    }
}
