use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("dipole coupling is singular at separation {separation} um")]
    Singular { separation: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("ill-conditioned three-point sample: |denominator| {denominator:e} below {threshold:e}")]
    IllConditioned { denominator: f64, threshold: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("oscillator strength is not identifiable: {0}")]
    Unidentifiable(String),

    #[error("invalid value for `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, constraint: impl Into<String>) -> Error {
    Error::Invalid {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
