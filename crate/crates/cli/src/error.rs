use std::path::{Path, PathBuf};

use mse_core::pipeline::ConstraintReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: line {line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("config: {0}")]
    Config(String),

    #[error("constraint violation in strict mode: {}", .0.violations().join(", "))]
    Constraint(Box<ConstraintReport>),

    #[error("{0}")]
    Guard(String),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 0 success, 2 strict constraint violation, 3 guard or budget, 4 I/O
    /// or parse, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Constraint(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Config(_) => 4,
            CliError::Failed(_) => 1,
        }
    }

    /// Wraps a core error raised while working on `path`.
    pub fn at(path: &Path, e: mse_core::Error) -> Self {
        match e {
            mse_core::Error::Parse { line, msg } => CliError::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            mse_core::Error::Io(source) => CliError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => CliError::Failed(format!("{}: {other}", path.display())),
        }
    }
}

impl From<mse_core::Error> for CliError {
    fn from(e: mse_core::Error) -> Self {
        match e {
            mse_core::Error::Constraint(r) => CliError::Constraint(r),
            g @ mse_core::Error::Guard { .. } => CliError::Guard(g.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
