//! Transport between lifted multicomponent seismograms.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uvot_core::io::{read_csv, read_field, write_csv, write_field};
use uvot_core::lift::lift_lorentz;
use uvot_core::{solve, FieldV, Grid2, LiftKind, Power, SignedSignal2, SolverConfig, SolverResult, TransportProblem};
use uvot_fwi::trace_grid;

use crate::error::{ExperimentError, Result};

/// Acquisition of a seismogram: `receivers` traces of `samples` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeismogramSpec {
    pub receivers: usize,
    pub samples: usize,
    /// Recording time in s.
    pub duration: f64,
    /// Horizontal extent of the receiver line in m.
    pub extent: f64,
    /// Average velocity converting time to length, in m/s.
    pub mean_velocity: f64,
    pub lift: LiftKind,
}

impl SeismogramSpec {
    /// Side `ℓ = N_r - 1` of the square data domain.
    pub fn side(&self) -> f64 {
        (self.receivers.max(2) - 1) as f64
    }

    /// `[0, ℓ]²` sampled by the receivers and the time samples.
    pub fn grid(&self) -> Result<Grid2> {
        Ok(trace_grid(self.receivers, self.samples)?)
    }

    /// Lengths of the receiver line and of the recording time converted by
    /// the mean velocity, both in m, before the rescale to `[0, ℓ]²`.
    pub fn physical_extents(&self) -> (f64, f64) {
        (self.extent, self.duration * self.mean_velocity)
    }

    /// Puts a signal recorded on any `receivers x samples` grid onto
    /// [`Self::grid`].
    pub fn rescale(&self, s: SignedSignal2) -> Result<SignedSignal2> {
        let g = s.grid();
        if g.nx() != self.receivers || g.ny() != self.samples {
            return Err(ExperimentError::ShapeMismatch(format!(
                "seismogram is {}x{}, expected {}x{}",
                g.nx(),
                g.ny(),
                self.receivers,
                self.samples
            )));
        }
        Ok(s.with_grid(self.grid()?)?)
    }
}

#[derive(Debug, Clone)]
pub struct SeismoResult {
    pub lambda: f64,
    pub p: Power,
    pub q: Power,
    pub result: SolverResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub lambda: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap: f64,
    pub residual: f64,
    /// Largest absolute value of each Lorentz component of `δ`.
    pub max_delta: [f64; 3],
}

impl SeismoResult {
    pub fn summary(&self) -> Summary {
        let r = &self.result;
        let mut max_delta = [0.0f64; 3];
        for site in r.delta.as_slice().chunks_exact(3) {
            for (m, d) in max_delta.iter_mut().zip(site) {
                *m = m.max(d.abs());
            }
        }
        Summary {
            lambda: self.lambda,
            cost: r.cost,
            iterations: r.iterations,
            converged: r.converged,
            gap: r.gap,
            residual: r.residual,
            max_delta,
        }
    }

    /// Writes `delta_x`, `delta_z`, `delta_alpha` field files, `history.csv`
    /// and `result.json` into `dir`.
    pub fn write(&self, dir: &Path, spec: &SeismogramSpec) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let d = &self.result.delta;
        for (k, name) in ["delta_x", "delta_z", "delta_alpha"].iter().enumerate() {
            let f = FieldV::from_vec(*d.grid(), 1, d.component(k))?;
            write_field(&dir.join(format!("{name}.rawh")), &f)?;
        }
        write_history(&dir.join("history.csv"), &self.result)?;
        let (x, t) = spec.physical_extents();
        let meta = serde_json::json!({
            "summary": self.summary(),
            "p": self.p.value(),
            "q": self.q.value(),
            "side": spec.side(),
            "receiver_extent_m": x,
            "time_extent_m": t,
            "mean_velocity": spec.mean_velocity,
            "lift": spec.lift,
        });
        std::fs::write(dir.join("result.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

/// Iteration, duality gap and constraint residual of every stopping check.
pub fn write_history(path: &Path, r: &SolverResult) -> Result<()> {
    let rows = r
        .gap_history
        .iter()
        .zip(&r.residual_history)
        .map(|(&(it, gap), &(_, res))| vec![it as f64, gap, res, gap.max(res)]);
    write_csv(path, &["iteration", "gap", "residual", "error"], rows)?;
    Ok(())
}

/// Solves `T(lift μ, lift ν)` with `λ = lambda_factor · ℓ`.
pub fn seismo_transport(
    spec: &SeismogramSpec,
    mu: &SignedSignal2,
    nu: &SignedSignal2,
    lambda_factor: f64,
    p: Power,
    q: Power,
    solver: &SolverConfig,
) -> Result<SeismoResult> {
    let (mu, nu) = (spec.rescale(mu.clone())?, spec.rescale(nu.clone())?);
    let lambda = lambda_factor * spec.side();
    let problem = TransportProblem::new(lift_lorentz(&mu, spec.lift), lift_lorentz(&nu, spec.lift), lambda, p, q)?;
    Ok(SeismoResult {
        lambda,
        p,
        q,
        result: solve(&problem, solver)?,
    })
}

/// One solve per entry of `factors`, in the same order.
pub fn lambda_sweep(
    spec: &SeismogramSpec,
    mu: &SignedSignal2,
    nu: &SignedSignal2,
    factors: &[f64],
    p: Power,
    q: Power,
    solver: &SolverConfig,
) -> Result<Vec<SeismoResult>> {
    factors.par_iter().map(|&f| seismo_transport(spec, mu, nu, f, p, q, solver)).collect()
}

/// Loads a two-component seismogram from a field file (`n = 2`) or from a
/// CSV with one row per time sample and columns `vx, vz` per receiver.
pub fn load_seismogram(path: &Path) -> Result<SignedSignal2> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let (header, rows) = read_csv(path)?;
        if header.len() % 2 != 0 || rows.is_empty() {
            return Err(ExperimentError::ShapeMismatch(format!(
                "{}: expected an even number of columns and at least one row",
                path.display()
            )));
        }
        let nr = header.len() / 2;
        let g = trace_grid(nr, rows.len())?;
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        let vx = values.iter().step_by(2).copied().collect();
        let vz = values.iter().skip(1).step_by(2).copied().collect();
        return Ok(SignedSignal2::new(g, vx, vz)?);
    }
    let f = read_field(path)?;
    if f.n() != 2 {
        return Err(ExperimentError::ShapeMismatch(format!("{}: {} components, expected 2", path.display(), f.n())));
    }
    Ok(SignedSignal2::from_field(&f)?)
}

pub fn save_seismogram_csv(path: &Path, s: &SignedSignal2) -> Result<()> {
    let nr = s.grid().nx();
    let names: Vec<String> = (0..nr).flat_map(|r| [format!("vx{r}"), format!("vz{r}")]).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows = (0..s.grid().ny()).map(|n| {
        (0..nr).flat_map(|r| [s.vx()[n * nr + r], s.vz()[n * nr + r]]).collect::<Vec<_>>()
    });
    write_csv(path, &header, rows)?;
    Ok(())
}
