//! Result bundles written by the command-line tool.

use std::path::Path;

use serde::Serialize;
use uvot_core::io::{write_field, write_field_vd};
use uvot_core::SolverResult;

use crate::error::Result;
use crate::seismo::write_history;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap: f64,
    pub residual: f64,
    pub gap_absolute: bool,
    pub constraint_violation: f64,
}

impl From<&SolverResult> for SolveReport {
    fn from(r: &SolverResult) -> Self {
        Self {
            cost: r.cost,
            iterations: r.iterations,
            converged: r.converged,
            gap: r.gap,
            residual: r.residual,
            gap_absolute: r.gap_absolute,
            constraint_violation: r.constraint_violation,
        }
    }
}

/// Writes `phi`, `sigma`, `delta`, `history.csv` and `result.json`.
pub fn write_solution(dir: &Path, r: &SolverResult) -> Result<SolveReport> {
    std::fs::create_dir_all(dir)?;
    write_field(&dir.join("phi.rawh"), &r.phi)?;
    write_field_vd(&dir.join("sigma.rawh"), &r.sigma)?;
    write_field(&dir.join("delta.rawh"), &r.delta)?;
    write_history(&dir.join("history.csv"), r)?;
    let report = SolveReport::from(r);
    std::fs::write(dir.join("result.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
