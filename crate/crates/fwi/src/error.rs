use thiserror::Error;

#[derive(Debug, Error)]
pub enum FwiError {
    #[error("CFL condition violated: dt = {dt:e} exceeds {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("wavefield blew up at step {step}")]
    Blowup { step: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("forward snapshots are missing; run forward with snapshots enabled")]
    MissingSnapshots,

    #[error("record shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("transport solve did not converge: gap {gap:e}, residual {residual:e} after {iterations} iterations")]
    TransportNotConverged { gap: f64, residual: f64, iterations: usize },

    #[error(transparent)]
    Core(#[from] uvot_core::Error),
}

pub type Result<T> = std::result::Result<T, FwiError>;
