use brink_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_BOUND_STATE: i32 = 3;
pub const EXIT_NO_TRANSITION: i32 = 4;
pub const EXIT_WINDOW_FAILED: i32 = 5;
pub const EXIT_INADMISSIBLE: i32 = 6;
pub const EXIT_NUMERICAL: i32 = 7;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e {
                Error::NoBoundState => EXIT_NO_BOUND_STATE,
                Error::NoSignChange { .. } | Error::PredicateConstant { .. } => EXIT_NO_TRANSITION,
                Error::InadmissibleAt { .. } => EXIT_INADMISSIBLE,
                Error::InvalidModel(_) => EXIT_CONFIG,
                Error::Io(_) => EXIT_IO,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
