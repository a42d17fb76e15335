use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("potential cannot be evaluated at |k| = {norm} (cutoff {cutoff})")]
    OutOfRange { norm: f64, cutoff: f64 },

    #[error("k-sum not converged: tail bound {tail:e} exceeds tolerance {tol:e} at cutoff {cutoff}")]
    NonConvergent { tail: f64, tol: f64, cutoff: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("infeasible patch geometry: {0}")]
    Infeasible(String),

    #[error("empty index set for k = {k:?}")]
    EmptyIndexSet { k: [i64; 3] },

    #[error("matrix not positive semidefinite: min eigenvalue {min_eig:e}")]
    NotPsd { min_eig: f64 },

    #[error("near-singular matrix: min eigenvalue {min_eig:e}")]
    NearSingular { min_eig: f64 },

    #[error("logarithm branch ambiguity: rotation angle {angle} too close to pi")]
    LogBranch { angle: f64 },


    #[error("mode count {n} exceeds limit {limit}")]
    DimensionLimit { n: usize, limit: usize },

    #[error("closure restriction leaves no interaction terms")]
    EmptyInteraction,

    #[error("degenerate fit: all errors are zero")]
    DegenerateFit,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cache error: {0}")]
    Cache(String),
}
