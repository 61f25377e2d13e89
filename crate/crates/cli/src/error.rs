use std::path::PathBuf;

use scissor_core::Error as CoreError;

/// Failure of a command, mapped onto a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("interrupted: {reason}; partial table left at {}", partial.display())]
    Interrupted { reason: String, partial: PathBuf },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(CoreError),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Interrupted { .. } => 4,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::Target(_) | CoreError::Config(_) => 2,
                CoreError::InfeasibleAssembly { .. } | CoreError::NoClosure { .. } | CoreError::Sweep { .. } => 3,
                CoreError::NanPoisoned { .. } => 1,
            },
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
