use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("chain requires at least two masses")]
    TooFewMasses,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("mass index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size {dt:e} s exceeds the limit {limit:e} s (T/50 with T = sqrt(m1/k1))")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("non-finite state encountered at t = {t:e} s")]
    NonFinite { t: f64 },

    #[error("cofactor determinant is limited to n <= {max}, got n = {n}")]
    MatrixTooLarge { n: usize, max: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no temporal overlap between track and model")]
    NoOverlap,

    #[error("{path}: row {row}: {message}")]
    Csv {
        path: String,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
