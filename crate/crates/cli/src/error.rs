use ael_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("validation failed: {0} check(s) did not pass")]
    Validation(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParams(_) | CoreError::AssumptionViolated { .. } | CoreError::OutOfDomain { .. } => {
                CliError::Config(e.to_string())
            }
            CoreError::NoEquilibrium(m) => CliError::NoEquilibrium(m),
            CoreError::WrongScheme { .. } => CliError::NoEquilibrium(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoEquilibrium(_) | CliError::Convergence(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}
