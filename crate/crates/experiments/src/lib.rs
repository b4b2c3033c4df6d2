//! Shift-sensitivity scans, transport between seismograms, and the drivers
//! behind the `uvot` command-line tool.

pub mod error;
pub mod fwi_run;
pub mod output;
pub mod seismo;
pub mod shift;
pub mod synth;

pub use error::{ExperimentError, Result};
