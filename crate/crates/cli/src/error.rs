use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad files, or a configuration that cannot run.
    #[error("{0}")]
    Input(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] sparsetrig::Error),
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        use sparsetrig::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Core(e) => match e {
                E::Oracle(_) => EXIT_ORACLE,
                E::InvalidArgument(_)
                | E::EvenRule(_)
                | E::DimensionMismatch { .. }
                | E::NotLower(_)
                | E::BudgetExhaustedAtInit { .. }
                | E::GridFile(_)
                | E::Io(_)
                | E::Json(_) => EXIT_INPUT,
                E::MissingSample(_) | E::MissingTensor(_) | E::Underdetermined { .. } | E::RankDeficient { .. } => {
                    EXIT_INTERNAL
                }
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
