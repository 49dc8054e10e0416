pub mod eval_csr;
pub mod eval_zsl;
pub mod recommend;
pub mod train;

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use llae::DataError;

/// Command failures, bucketed by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Flag combinations or values clap cannot check itself. Exit 2.
    Usage(String),
    /// Unreadable or malformed input files. Exit 3.
    Data(DataError),
    /// Solver or model failures. Exit 4.
    Numeric(llae::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e)
    }
}

impl From<llae::Error> for CliError {
    fn from(e: llae::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(DataError::Io(e))
    }
}

/// Reads a text file into trimmed, non-empty lines.
pub fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let file = File::open(path).map_err(|e| {
        CliError::Data(DataError::Io(io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
    }
    Ok(out)
}

/// Writer for an optional output path, falling back to stdout.
pub fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => Ok(Box::new(File::create(p)?)),
        None => Ok(Box::new(io::stdout())),
    }
}

/// Parses a comma-separated list of positive integers, e.g. a k-list.
pub fn parse_usize_list(text: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let v: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{flag}: `{part}` is not an integer")))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{flag}: empty list")));
    }
    Ok(out)
}
