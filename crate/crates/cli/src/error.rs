use std::process::ExitCode;

/// Errors surfaced by the command-line tool, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column '{column}': {message}")]
    Parse { line: usize, column: String, message: String },
    #[error("no column named 'label'")]
    MissingLabelColumn,
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("model has dimension {found}, this command needs {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Core(#[from] optiscore::Error),
}

impl CliError {
    /// 1 for usage errors, 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: err.to_string() }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
