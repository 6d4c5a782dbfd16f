use std::fmt;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ENVIRONMENT: i32 = 2;
pub const EXIT_STABILITY_TIMEOUT: i32 = 3;
pub const EXIT_ANALYSIS_VIOLATION: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files.
    Usage(String),
    /// Hardware, daemon or filesystem trouble.
    Environment(String),
    StabilityTimeout(String),
    /// Methods used more energy than their project.
    AnalysisViolation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Environment(_) => EXIT_ENVIRONMENT,
            CliError::StabilityTimeout(_) => EXIT_STABILITY_TIMEOUT,
            CliError::AnalysisViolation(_) => EXIT_ANALYSIS_VIOLATION,
        }
    }

    pub fn usage(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn env(e: impl fmt::Display) -> Self {
        CliError::Environment(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Environment(m) => write!(f, "environment error: {m}"),
            CliError::StabilityTimeout(m) => write!(f, "stability timeout: {m}"),
            CliError::AnalysisViolation(m) => write!(f, "analysis violation: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
