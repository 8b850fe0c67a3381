use std::fmt;

/// Failures the binary reports, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or arguments. Exit code 2.
    Config(String),
    /// A check or a training run failed, or I/O went wrong. Exit code 1.
    Failure(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn failure(msg: impl Into<String>) -> Self {
        CliError::Failure(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<epsinit::Error> for CliError {
    fn from(e: epsinit::Error) -> Self {
        use epsinit::Error as E;
        match e {
            E::Input(_) | E::Dimension { .. } | E::InitParse { .. } => CliError::Config(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}
