use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Missing, malformed or inconsistent configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric argument outside the domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested violation probability is below the packet drop floor.
    #[error("infeasible target sigma = {target:e}: the drop rate rho2 = {rho2:e} is a lower bound on the violation probability")]
    Infeasible { target: f64, rho2: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) => 3,
            Error::Infeasible { .. } => 4,
            Error::Io { .. } => 5,
        }
    }
}
