use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(
        "incompatible right-hand side for singular Poisson problem: component {component} \
         has total mass {mass:e} (relative {relative:e})"
    )]
    IncompatibleRhs {
        component: usize,
        mass: f64,
        relative: f64,
    },

    #[error("balanced transport requires equal masses: component {component} differs by {relative:e} (relative)")]
    UnequalMass { component: usize, relative: f64 },

    #[error("solver diverged at iteration {iteration}: {what}")]
    Diverged { iteration: usize, what: String },

    #[error("point ({x}, {y}) lies outside the grid domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
