use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("degree exhausted: {what} needs degree {needed}, only {available} available")]
    DegreeExhausted {
        what: String,
        needed: usize,
        available: usize,
    },

    #[error("singular field: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid jet: {0}")]
    InvalidJet(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("undeclared variables: {}", .0.join(", "))]
    Undeclared(Vec<String>),

    #[error("metric is not positive definite at {point:?} (leading minor {minor} = {value:e})")]
    NotPositiveDefinite {
        point: Vec<f64>,
        minor: usize,
        value: f64,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("embedding is not umbilic: max |L0| = {max:e} at {point:?} (tolerance {tol:e})")]
    NonUmbilic { max: f64, point: Vec<f64>, tol: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("configuration error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn degree(what: impl Into<String>, needed: usize, available: usize) -> Self {
        Error::DegreeExhausted {
            what: what.into(),
            needed,
            available,
        }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
