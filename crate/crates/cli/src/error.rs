use std::path::PathBuf;

use ami_core::AmiError;
use thiserror::Error;

pub const EXIT_IO: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] AmiError),

    #[error("{0}")]
    Validation(String),

    #[error("cannot read config `{}`: {source}", path.display())]
    ConfigRead { path: PathBuf, source: std::io::Error },

    #[error("config `{}`: {detail}", path.display())]
    ConfigParse { path: PathBuf, detail: String },

    #[error("cannot write `{}`: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for I/O, 3 for unparseable input, 4 for everything the data or flags failed to satisfy.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                AmiError::Io(_) => EXIT_IO,
                AmiError::Csv(c) if c.is_io_error() => EXIT_IO,
                AmiError::Csv(_) | AmiError::Parse { .. } | AmiError::Json(_) => EXIT_PARSE,
                _ => EXIT_VALIDATION,
            },
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::ConfigRead { .. } | CliError::Write { .. } => EXIT_IO,
            CliError::ConfigParse { .. } => EXIT_PARSE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
