//! A two-layer survey: sources and receivers on a line near the top of the
//! model, a flat interface below, and a smoothed copy of the truth as the
//! starting model.

use serde::{Deserialize, Serialize};
use uvot_core::Grid2;

use crate::error::{FwiError, Result};
use crate::invert::{FwiProblem, GradientDescent};
use crate::misfit::{Misfit, MisfitKind};
use crate::model::{smooth, two_layer, AcousticModel, Source, Sponge};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub nx: usize,
    pub nz: usize,
    /// Grid spacing in m.
    pub h: f64,
    /// Row of the first node of the lower layer.
    pub interface: usize,
    pub c_top: f64,
    pub c_bottom: f64,
    /// Gaussian width, in cells, used to smooth the truth into the
    /// starting model.
    pub initial_smoothing: f64,
    pub rho: f64,
    pub dt: f64,
    pub nt: usize,
    pub freq: f64,
    pub sources: usize,
    pub receiver_step: usize,
    /// Row of sources and receivers.
    pub acquisition_row: usize,
    pub sponge: Sponge,
    pub misfit: MisfitKind,
    pub lambda: f64,
    pub eps: f64,
    pub iterations: usize,
    /// First trial step, as the largest velocity change (m/s).
    pub step: f64,
    pub gradient_smoothing: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            nx: 60,
            nz: 60,
            h: 10.0,
            interface: 32,
            c_top: 2000.0,
            c_bottom: 2500.0,
            initial_smoothing: 3.0,
            rho: 1000.0,
            dt: 1.5e-3,
            nt: 400,
            freq: 15.0,
            sources: 3,
            receiver_step: 2,
            acquisition_row: 14,
            sponge: Sponge::default(),
            misfit: MisfitKind::T12,
            lambda: 1e3,
            eps: 1e-2,
            iterations: 20,
            step: 100.0,
            gradient_smoothing: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Demo {
    pub problem: FwiProblem,
    pub truth: Vec<f64>,
    pub initial: Vec<f64>,
    pub optimizer: GradientDescent,
}

impl DemoConfig {
    pub fn grid(&self) -> Result<Grid2> {
        Ok(Grid2::new(self.nx, self.nz, self.h, self.h)?)
    }

    /// Columns strictly inside the sponge.
    fn interior(&self) -> (usize, usize) {
        let w = self.sponge.width;
        (w + 1, self.nx.saturating_sub(w + 1))
    }

    pub fn source_nodes(&self) -> Vec<(usize, usize)> {
        let (lo, hi) = self.interior();
        let n = self.sources.max(1);
        if n == 1 {
            return vec![((lo + hi) / 2, self.acquisition_row)];
        }
        (0..n).map(|k| (lo + 1 + (hi - 2 - lo) * k / (n - 1), self.acquisition_row)).collect()
    }

    pub fn receiver_nodes(&self) -> Vec<(usize, usize)> {
        let (lo, hi) = self.interior();
        (lo..=hi).step_by(self.receiver_step.max(1)).map(|i| (i, self.acquisition_row)).collect()
    }

    /// Sites updated by the inversion: inside the sponge and below the
    /// acquisition line.
    pub fn mask(&self) -> Vec<bool> {
        let (lo, hi) = self.interior();
        let bottom = self.nz.saturating_sub(self.sponge.width + 1);
        (0..self.nx * self.nz)
            .map(|s| {
                let (i, j) = (s % self.nx, s / self.nx);
                i >= lo && i < hi && j > self.acquisition_row + 1 && j < bottom
            })
            .collect()
    }

    pub fn truth(&self) -> Result<Vec<f64>> {
        Ok(two_layer(&self.grid()?, self.interface, self.c_top, self.c_bottom))
    }

    pub fn misfit(&self) -> Misfit {
        Misfit::new(self.misfit, self.lambda).with_eps(self.eps)
    }

    /// Base model carrying `velocity`, the receivers and the first source.
    pub fn model(&self, velocity: Vec<f64>) -> Result<AcousticModel> {
        let sources = self.source_nodes();
        let model = AcousticModel {
            grid: self.grid()?,
            velocity,
            rho: self.rho,
            dt: self.dt,
            nt: self.nt,
            source: Source::new(sources[0], self.freq),
            receivers: self.receiver_nodes(),
            sponge: self.sponge,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds the survey with data observed on `truth` (defaults to the two
    /// layers) starting from `initial` (defaults to the smoothed truth).
    pub fn build_with(&self, truth: Option<Vec<f64>>, initial: Option<Vec<f64>>) -> Result<Demo> {
        let g = self.grid()?;
        let truth = match truth {
            Some(t) => t,
            None => self.truth()?,
        };
        let initial = initial.unwrap_or_else(|| smooth(&g, &truth, self.initial_smoothing));
        if truth.len() != g.n_sites() || initial.len() != g.n_sites() {
            return Err(FwiError::ShapeMismatch("velocity models do not match the grid".into()));
        }
        let sources = self.source_nodes().into_iter().map(|n| Source::new(n, self.freq)).collect();
        let problem = FwiProblem::synthetic(self.model(initial.clone())?, sources, &truth, self.misfit())?
            .with_mask(self.mask())
            .with_smoothing(self.gradient_smoothing);
        let all: Vec<f64> = truth.iter().chain(&initial).copied().collect();
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = AcousticModel::max_dt(&g, &[1.0]) / self.dt;
        Ok(Demo {
            problem,
            truth,
            initial,
            optimizer: GradientDescent::new(self.step, (0.5 * lo, hi)),
        })
    }

    pub fn build(&self) -> Result<Demo> {
        self.build_with(None, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_stays_inside_the_sponge() {
        let c = DemoConfig::default();
        let s = c.source_nodes();
        assert_eq!(s, vec![(14, 14), (30, 14), (46, 14)]);
        let r = c.receiver_nodes();
        assert_eq!((r.len(), r[0], r[17]), (18, (13, 14), (47, 14)));
        let m = c.mask();
        assert!(!m[14 * 60 + 30] && m[30 * 60 + 30] && !m[30 * 60 + 5]);
    }

    #[test]
    fn upper_bound_respects_cfl() {
        let d = DemoConfig::default().build().unwrap();
        let hi = d.optimizer.bounds.1;
        let model = d.problem.model.with_velocity(vec![hi; 3600]);
        assert!(model.validate().is_ok());
    }
}
