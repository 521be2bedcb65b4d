use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A density operator or Bloch vector that is not a physical state.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive step size collapsed below the underflow threshold.
    #[error("step size underflow at t = {t:.6e} (dt = {dt:.3e}, state = ({x:.6}, {y:.6}, {z:.6}), delta = {delta:.6})")]
    Stiffness {
        t: f64,
        dt: f64,
        x: f64,
        y: f64,
        z: f64,
        delta: f64,
    },

    #[error("maximum step count {0} exceeded")]
    StepLimit(usize),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Wraps the error with a description of the run that produced it.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by configuration or usage rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Run { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
