use thiserror::Error;

/// Errors surfaced by kernel construction, estimators and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vertex encoding: {0}")]
    Encoding(String),

    #[error("subgraph spec error: {0}")]
    Spec(String),

    #[error("row at {vertex} has zero mass inside the subgraph; the walk cannot stay")]
    Normalization { vertex: String },

    #[error("no return to the start vertex within depth {depth}; period detection failed")]
    PeriodDetection { depth: usize },

    #[error("not enough usable points for extrapolation ({found} found, {needed} needed)")]
    InsufficientData { found: usize, needed: usize },

    #[error("kernel rows are not uniform: row sum {found} at {vertex} differs from {expected}")]
    Transitivity {
        vertex: String,
        expected: f64,
        found: f64,
    },

    #[error("offspring mean must exceed 1, got {m}")]
    SubcriticalMean { m: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("projection check did not pass: {0}")]
    Projection(String),
}

pub type Result<T> = std::result::Result<T, Error>;
