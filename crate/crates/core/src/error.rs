use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid matrix shape: n={n}, p={p} (need 2 <= n <= p)")]
    InvalidShape { n: usize, p: usize },

    #[error("point outside the admissible domain: {0}")]
    DomainError(String),

    #[error("degenerate quadratic at z = {0}")]
    DegenerateQuadratic(String),

    #[error(
        "quadrature did not converge: estimate {estimate}, error {error} > tolerance {tolerance}"
    )]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenvector matrix is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error(
        "smoothing configuration violates 2vH <= eps^(3/2): 2vH = {lhs:e}, eps^(3/2) = {rhs:e}"
    )]
    InadmissibleConfig { lhs: f64, rhs: f64 },

    #[error("epsilon {epsilon} >= sqrt(y)/2 = {limit}; increase n or decrease d")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },

    #[error("insufficient data for a rate fit: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
