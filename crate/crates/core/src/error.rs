use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The k-th and (k+1)-th largest entries coincide, so top-k rounding is not
    /// well defined.
    #[error("ambiguous rounding: boundary value {value} is tied")]
    Ambiguous { value: f64 },

    #[error("enumeration of {count} subsets exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("certificate construction failed: {0}")]
    Certificate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
