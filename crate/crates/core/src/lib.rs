//! Unbalanced L¹ optimal transport between vector-valued measures on 2D
//! Cartesian grids.
//!
//! The dual problem `sup <φ, ν - μ>_X` over potentials with `|∇φ| <= 1` and
//! either `|φ| <= λ` (`q = 1`) or a `-|φ|²/(2λ)` penalty (`q = 2`) is solved
//! by [`sdmm::solve`]; `p = q = 2` is solved directly by
//! [`elliptic::solve_h1`].

pub mod calculus;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod lift;
pub mod oracles;
pub mod poisson;
pub mod sdmm;
pub mod vector;

pub use error::{Error, Result};
pub use field::{FieldV, FieldVd};
pub use grid::Grid2;
pub use lift::{LiftKind, SignedSignal2};
pub use poisson::PoissonPlan;
pub use sdmm::{solve, Power, SolverConfig, SolverResult, TransportProblem};
pub use vector::{Cone, VdNorm, VectorModel};
