use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("region `{0}` has no assigned columns")]
    EmptyRegion(String),

    #[error("alignment error for member {member}: {reason}")]
    Alignment { member: u32, reason: String },

    #[error("numerical underflow: {0}")]
    NumericalUnderflow(String),

    #[error("window {window}: {source}")]
    Window { window: usize, source: Box<Error> },

    #[error("ensemble of size {0} has no variance estimate")]
    NoVariance(usize),

    #[error("unknown node {0}")]
    UnknownNode(usize),

    #[error("no path from node {from} to node {to}")]
    PathNotFound { from: usize, to: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
