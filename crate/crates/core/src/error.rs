use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node id {id} out of range for a population of {n}")]
    Range { id: u64, n: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("enumeration needs {needed:.0} reorderings, above the cap of {cap}; use the Markov chain approximation")]
    Capacity { needed: f64, cap: u64 },

    #[error("infeasible reduced data: {0}")]
    Infeasible(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
