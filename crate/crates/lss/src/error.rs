use std::path::PathBuf;

use lss_core::LssError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Numerical(#[from] LssError),
    /// A failed ensemble member, with what is needed to rerun it alone.
    #[error("{system}, {variable} = {value}, member {member} (seed {seed}): {source}")]
    Run {
        system: String,
        variable: &'static str,
        value: f64,
        member: usize,
        seed: u64,
        #[source]
        source: LssError,
    },
    #[error("forward and adjoint sensitivities differ by {difference:e} (limit {limit:e})")]
    Duality { difference: f64, limit: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io { .. } | Error::Parse { .. } | Error::Csv(_) => 1,
            Error::Numerical(_) | Error::Run { .. } | Error::Duality { .. } => 2,
        }
    }
}
