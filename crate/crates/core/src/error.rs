use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation was called on data that violates its precondition
    /// (wrong space tag, mismatched grids, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A radial integral diverges at the origin.
    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("density floor violated in {cells} cell(s): min(rho) = {min_density:.6e} < {floor:.6e}")]
    DensityFloor {
        cells: usize,
        min_density: f64,
        floor: f64,
    },

    #[error("non-finite value encountered; last valid time t = {last_valid_time}")]
    NonFinite { last_valid_time: f64 },

    #[error("ill-conditioned Gram matrix (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    /// Not enough data to reach a conclusion (too few samples, window too short).
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}
