use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Jacobi iteration did not converge within {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    NotConverged { sweeps: usize, off_diagonal: f64 },

    #[error("state is not normalized: trace = {trace}")]
    Normalization { trace: f64 },

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    Range {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("insufficient span: found {found} fidelity minima, need at least 2")]
    InsufficientSpan { found: usize },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
