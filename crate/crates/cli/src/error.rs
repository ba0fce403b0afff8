use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{0} exists; pass --force to overwrite")]
    Exists(String),

    #[error(transparent)]
    Core(#[from] cmkn::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 config/validation, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use cmkn::Error as E;
        match self {
            CliError::Config(_) | CliError::Exists(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::Contract(_) => 2,
                E::Numerical(_) => 4,
                E::EmptySequence { .. }
                | E::UnknownSymbol { .. }
                | E::Parse { .. }
                | E::Version { .. }
                | E::Digest { .. }
                | E::Json(_)
                | E::Io(_) => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
