use mergemon_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("internal error: {0}")]
    Internal(String),
}

fn is_config(e: &CoreError) -> bool {
    match e {
        CoreError::InvalidParameter { .. } | CoreError::Domain(_) | CoreError::MissingLossTangent(_) => true,
        CoreError::SpectrumPoint { source, .. } | CoreError::GeometryPoint { source, .. } => is_config(source),
        _ => false,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) if is_config(e) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_NUMERIC,
            CliError::Io { .. } | CliError::Internal(_) => EXIT_IO,
        }
    }
}
