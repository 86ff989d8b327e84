use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The truncated Fock space loses more norm than allowed.
    #[error("truncation insufficient: lost norm {lost:.3e} at dim {dim}, try dim >= {suggested}")]
    TruncationInsufficient {
        lost: f64,
        dim: usize,
        suggested: usize,
    },

    /// Population reached the top of the Fock space during integration.
    #[error("fock space overflow: boundary population {population:.3e} at t = {t}")]
    FockOverflow { population: f64, t: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("integrator step-size failure: {0}")]
    StepSize(String),

    /// Quasienergy crossing: q+ - q- equals an odd multiple of the field frequency.
    #[error("Floquet resonance: q+ - q- = {order} * omega0 (gap {gap:.3e})")]
    Resonance { order: i64, gap: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("time grids differ: {0}")]
    Grid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::InvalidDimension(_)
            | Error::UnsupportedRegime(_)
            | Error::Grid(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
