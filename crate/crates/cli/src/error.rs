use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

/// Failure of a subcommand, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments: exit 1.
    Usage(String),
    /// Invalid input data or configuration: exit 2.
    Data(affloop_core::Error),
    /// File or network I/O: exit 3.
    Io { what: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { what: path.display().to_string(), source }
    }

    pub fn net(what: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { what: what.into(), source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Io { what, source } => write!(f, "{what}: {source}"),
        }
    }
}

impl From<affloop_core::Error> for CliError {
    fn from(e: affloop_core::Error) -> Self {
        CliError::Data(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn out_path(dir: &Path, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.join(name))
}
