use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or mismatched caller input.
    #[error("input error: {0}")]
    Input(String),

    /// A factor scope is not contained in any patch of the cover.
    #[error("cover error: factor {factor} with scope {scope:?} is not contained in any patch")]
    Cover { factor: usize, scope: Vec<usize> },

    /// A node ended up with no admissible labels, or a cost system has no solution.
    #[error("infeasible model: {0}")]
    Infeasible(String),

    #[error("capacity exceeded: {what} needs {needed} but the cap is {cap}")]
    Capacity { what: String, needed: u128, cap: u128 },

    #[error("format error in {path:?} at byte {offset}: {msg}")]
    Format {
        path: PathBuf,
        offset: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
