//! Two-dimensional acoustic full waveform inversion at desk scale.
//!
//! [`propagate::forward`] records receiver velocities, [`misfit::evaluate`]
//! compares them with observed data (least squares or transport), and
//! [`propagate::adjoint`] pulls the misfit gradient back to the velocity
//! model. [`invert::invert`] runs a descent loop over several sources.

pub mod demo;
pub mod error;
pub mod invert;
pub mod misfit;
pub mod model;
pub mod propagate;

pub use demo::{Demo, DemoConfig};
pub use error::{FwiError, Result};
pub use invert::{invert, FwiProblem, GradientDescent, InversionHistory, Objective, Optimizer};
pub use misfit::{Misfit, MisfitKind, MisfitValue};
pub use model::{AcousticModel, Source, Sponge};
pub use propagate::{adjoint, forward, trace_grid, Gradient, Record};
