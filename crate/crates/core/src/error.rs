use std::path::PathBuf;

use crate::grid::Violation;
use crate::solver::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema error: {msg}")]
    Schema { path: PathBuf, msg: String },
    #[error("{entity} references unknown id \"{missing}\"")]
    UnresolvedReference { entity: String, missing: String },
    #[error("invalid instance: {}", summarize(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration would produce {count} realizations, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },
    #[error(
        "big-M saturated: {variable} = {value:.6e} is within tolerance of M = {big_m:.6e}; increase M"
    )]
    BigMSaturated {
        variable: String,
        value: f64,
        big_m: f64,
    },
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

fn summarize(v: &[Violation]) -> String {
    let mut parts: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    if v.len() > 5 {
        parts.push(format!("... and {} more", v.len() - 5));
    }
    parts.join("; ")
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }

    /// Whether the failure stems from user input rather than the engine.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Io { .. }
                | Error::Schema { .. }
                | Error::UnresolvedReference { .. }
                | Error::InvalidInstance(_)
                | Error::InvalidArgument(_)
        )
    }
}
