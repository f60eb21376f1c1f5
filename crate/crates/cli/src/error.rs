use std::fmt;
use std::io;
use std::path::Path;

use consensus_reliab::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: i32,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: "USAGE",
            message: message.into(),
            exit: EXIT_INPUT,
        }
    }

    pub fn input_file(path: &Path, e: io::Error) -> Self {
        CliError {
            code: "INPUT_FILE",
            message: format!("{}: {e}", path.display()),
            exit: EXIT_INPUT,
        }
    }

    pub fn output(path: Option<&Path>, e: io::Error) -> Self {
        let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
        CliError {
            code: "IO",
            message: format!("{target}: {e}"),
            exit: EXIT_IO,
        }
    }

    /// Single-line JSON record for stderr.
    pub fn record(&self) -> String {
        serde_json::json!({ "error": self.code, "message": self.message }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::NTooLarge { .. } | Error::UnstableQueue { .. } => EXIT_LIMIT,
            _ => EXIT_INPUT,
        };
        CliError {
            code: e.code(),
            message: e.to_string(),
            exit,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}
