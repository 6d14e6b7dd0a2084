use std::fmt;
use std::path::Path;

use higs_core::Error;

/// Process exit codes.
pub mod code {
    pub const NI: i32 = 0;
    pub const NOT_NI: i32 = 1;
    pub const UNKNOWN: i32 = 2;
    /// Unreadable or malformed input.
    pub const INPUT: i32 = 10;
    /// The request makes no sense for this plant (not SISO, singular, ...).
    pub const DOMAIN: i32 = 11;
    /// Invalid flags, parameters or configuration values.
    pub const VALIDATION: i32 = 12;
    /// An output file or directory could not be written.
    pub const FILESYSTEM: i32 = 13;
    /// The simulator stopped on one of its guards.
    pub const SIMULATION: i32 = 14;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn read(path: &Path, err: std::io::Error) -> Self {
        CliError::new(code::INPUT, format!("cannot read {}: {err}", path.display()))
    }

    pub fn write(path: &Path, err: std::io::Error) -> Self {
        CliError::new(code::FILESYSTEM, format!("cannot write {}: {err}", path.display()))
    }

    pub fn parse(path: &Path, err: impl fmt::Display) -> Self {
        CliError::new(code::INPUT, format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with some context.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) => code::INPUT,
        Error::InvalidConfig(_) | Error::ParameterViolation(_) | Error::InvalidGrid(_) | Error::EmptyGrid => {
            code::VALIDATION
        }
        Error::ZenoGuard { .. } | Error::NonFinite(_) | Error::OutsideSector(_) => code::SIMULATION,
        Error::SingularMatrix { .. }
        | Error::ConvergenceFailure(_)
        | Error::AsymmetricInput { .. }
        | Error::DimensionMismatch(_)
        | Error::SingularAtFrequency { .. }
        | Error::PreconditionQ0 { .. }
        | Error::EqualityInfeasible { .. }
        | Error::SearchInconclusive { .. }
        | Error::PreconditionDefiniteness(_)
        | Error::NotSiso { .. }
        | Error::NotSquare(_)
        | Error::Infeasible { .. } => code::DOMAIN,
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::new(exit_code(&err), err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
