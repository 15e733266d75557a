use std::fmt;

/// Failure classes, each with a fixed process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Missing required option; usage goes to stderr.
    Usage(String),
    Config(String),
    Data(String),
    Runtime(String),
    AllTrialsFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::AllTrialsFailed(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Data(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::AllTrialsFailed(m) => write!(f, "all trials failed: {m}"),
        }
    }
}

pub fn data(e: impl fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

pub fn config(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}
