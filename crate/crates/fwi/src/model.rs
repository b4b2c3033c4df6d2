//! Acoustic medium, acquisition geometry and the source wavelet.

use serde::{Deserialize, Serialize};
use uvot_core::Grid2;

use crate::error::{FwiError, Result};

/// `dt` may not exceed `CFL_FACTOR * min(h) / max(c)`.
pub const CFL_FACTOR: f64 = 0.5;

/// Zero-phase Ricker wavelet with peak frequency `freq`, delayed by `delay`.
pub fn ricker(t: f64, freq: f64, delay: f64) -> f64 {
    let a = (std::f64::consts::PI * freq * (t - delay)).powi(2);
    (1.0 - 2.0 * a) * (-a).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    /// Grid node `(i, j)`.
    pub node: (usize, usize),
    /// Ricker peak frequency in Hz.
    pub freq: f64,
    /// Peak volume injection rate in m³/s.
    pub amplitude: f64,
}

impl Source {
    pub fn new(node: (usize, usize), freq: f64) -> Self {
        Self {
            node,
            freq,
            amplitude: 1.0,
        }
    }

    /// Wavelet delay; the wavelet is negligible outside `[0, 2 delay]`.
    pub fn delay(&self) -> f64 {
        1.5 / self.freq
    }

    /// Time after which the source is treated as silent.
    pub fn duration(&self) -> f64 {
        2.0 * self.delay()
    }

    pub fn wavelet(&self, t: f64) -> f64 {
        self.amplitude * ricker(t, self.freq, self.delay())
    }
}

/// Exponential sponge: fields are multiplied every step by
/// `exp(-strength ((width - k) / width)²)` at distance `k < width` cells
/// from the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub width: usize,
    pub strength: f64,
}

impl Default for Sponge {
    fn default() -> Self {
        Self {
            width: 12,
            strength: 0.12,
        }
    }
}

impl Sponge {
    pub fn none() -> Self {
        Self {
            width: 0,
            strength: 0.0,
        }
    }

    pub fn damping(&self, grid: &Grid2) -> Vec<f64> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut out = vec![1.0; nx * ny];
        if self.width == 0 {
            return out;
        }
        let w = self.width as f64;
        for j in 0..ny {
            for i in 0..nx {
                let k = i.min(nx - 1 - i).min(j).min(ny - 1 - j);
                if k < self.width {
                    let r = (w - k as f64) / w;
                    out[j * nx + i] = (-self.strength * r * r).exp();
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticModel {
    pub grid: Grid2,
    /// Velocity in m/s per site, `j * nx + i`.
    pub velocity: Vec<f64>,
    pub rho: f64,
    pub dt: f64,
    pub nt: usize,
    pub source: Source,
    pub receivers: Vec<(usize, usize)>,
    pub sponge: Sponge,
}

impl AcousticModel {
    /// The largest stable step for this grid and velocity.
    pub fn max_dt(grid: &Grid2, velocity: &[f64]) -> f64 {
        let cmax = velocity.iter().copied().fold(0.0, f64::max);
        CFL_FACTOR * grid.hx().min(grid.hy()) / cmax
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n_sites();
        if self.velocity.len() != n {
            return Err(FwiError::InvalidModel(format!(
                "velocity has {} values for {n} sites",
                self.velocity.len()
            )));
        }
        if self.velocity.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(FwiError::InvalidModel("velocity must be positive and finite".into()));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(FwiError::InvalidModel(format!("density {} must be positive", self.rho)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || self.nt == 0 {
            return Err(FwiError::InvalidModel("dt and nt must be positive".into()));
        }
        let limit = Self::max_dt(&self.grid, &self.velocity);
        if self.dt > limit {
            return Err(FwiError::Cfl { dt: self.dt, limit });
        }
        let on_grid = |(i, j): (usize, usize)| i < self.grid.nx() && j < self.grid.ny();
        if !on_grid(self.source.node) {
            return Err(FwiError::InvalidModel(format!("source {:?} is off the grid", self.source.node)));
        }
        if self.receivers.is_empty() {
            return Err(FwiError::InvalidModel("no receivers".into()));
        }
        if let Some(r) = self.receivers.iter().find(|&&r| !on_grid(r)) {
            return Err(FwiError::InvalidModel(format!("receiver {r:?} is off the grid")));
        }
        if !(self.source.freq.is_finite() && self.source.freq > 0.0) {
            return Err(FwiError::InvalidModel("source frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn with_velocity(&self, velocity: Vec<f64>) -> Self {
        Self {
            velocity,
            ..self.clone()
        }
    }

    pub fn with_source(&self, source: Source) -> Self {
        Self {
            source,
            ..self.clone()
        }
    }

    /// Source samples `s^n`, `n = 0..nt`, at times `n dt`.
    pub fn source_samples(&self) -> Vec<f64> {
        (0..self.nt).map(|n| self.source.wavelet(n as f64 * self.dt)).collect()
    }

    pub fn site(&self, (i, j): (usize, usize)) -> usize {
        j * self.grid.nx() + i
    }
}

/// Velocity of two horizontal layers: `top` for `j < interface`, `bottom`
/// below.
pub fn two_layer(grid: &Grid2, interface: usize, top: f64, bottom: f64) -> Vec<f64> {
    (0..grid.n_sites())
        .map(|s| if s / grid.nx() < interface { top } else { bottom })
        .collect()
}

/// Separable Gaussian blur with standard deviation `sigma` cells, edges
/// clamped.
pub fn smooth(grid: &Grid2, field: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return field.to_vec();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let pass = |src: &[f64], along_x: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for j in 0..ny {
            for i in 0..nx {
                let mut acc = 0.0;
                for (k, w) in (-r..=r).zip(&kernel) {
                    let (ii, jj) = if along_x {
                        ((i + k).clamp(0, nx - 1), j)
                    } else {
                        (i, (j + k).clamp(0, ny - 1))
                    };
                    acc += w * src[(jj * nx + ii) as usize];
                }
                out[(j * nx + i) as usize] = acc / total;
            }
        }
        out
    };
    pass(&pass(field, true), false)
}
