use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for degree {k}")]
    Index { k: usize, index: usize },

    #[error("dimension mismatch: operator has size {expected}, section has size {found}")]
    Dimension { expected: usize, found: usize },

    /// The point sits on (or numerically too close to) the zero set of the symbol.
    #[error("regime error: |f(z)| = {value:e} is below {threshold:e}")]
    Regime { value: f64, threshold: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
