use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Search(#[from] spectral_search::Error),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| Self::Io { context, source }
    }

    pub fn exit_code(&self) -> ExitCode {
        use spectral_search::Error as E;
        let code = match self {
            Self::Config(_) => 1,
            Self::Search(e) => match e {
                E::Argument(_) | E::Input(_) | E::Dimension { .. } | E::Refused(_) | E::Parse { .. } => 1,
                E::Protocol { .. } | E::Timeout(_) => 3,
                E::Evaluator(_) | E::Io(_) => 2,
            },
            Self::Io { .. } => 2,
        };
        ExitCode::from(code)
    }
}

pub type CliResult<T> = Result<T, CliError>;
