//! Direct solver for `(-Δ_X + c) φ = rhs`, applied componentwise.
//!
//! The Neumann Laplacian produced by the forward/backward difference pair is
//! diagonalized along `x` by a type-II cosine transform. Each cosine mode then
//! leaves a tridiagonal Neumann system along `y`, solved by a precomputed
//! Thomas factorization swept over all modes at once.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::calculus;
use crate::error::{Error, Result};
use crate::field::FieldV;
use crate::grid::Grid2;

/// Relative mean tolerance for the singular (`c = 0`) problem.
pub const COMPAT_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct PoissonPlan {
    grid: Grid2,
    shift: f64,
    // Eigenvalues of -Δ_X + c in mode order k_y * n_x + k_x.
    eigen: Vec<f64>,
    dct_x: Arc<dyn TransformType2And3<f64>>,
    // Thomas factorization per x-mode, laid out j * n_x + k_x.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
    off: f64,
}

impl std::fmt::Debug for PoissonPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonPlan")
            .field("grid", &self.grid)
            .field("shift", &self.shift)
            .finish_non_exhaustive()
    }
}

fn axis_eigen(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * n as f64)).sin();
            4.0 * s * s / (h * h)
        })
        .collect()
}

impl PoissonPlan {
    pub fn new(grid: Grid2, shift: f64) -> Result<Self> {
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidParameter(format!("Poisson shift {shift} must be a nonnegative real")));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let ex = axis_eigen(nx, grid.hx());
        let ey = axis_eigen(ny, grid.hy());
        let mut eigen = Vec::with_capacity(grid.n_sites());
        for &ly in &ey {
            for &lx in &ex {
                eigen.push(lx + ly + shift);
            }
        }

        let w = 1.0 / (grid.hy() * grid.hy());
        let off = -w;
        let mut upper = vec![0.0; nx * ny];
        let mut inv_pivot = vec![0.0; nx * ny];
        for (kx, &lx) in ex.iter().enumerate() {
            let mut prev_upper = 0.0;
            for j in 0..ny {
                let links = usize::from(j > 0) + usize::from(j + 1 < ny);
                let diag = links as f64 * w + lx + shift;
                let pivot = diag - off * prev_upper;
                let singular = shift == 0.0 && kx == 0 && j + 1 == ny;
                let inv = if singular { 0.0 } else { 1.0 / pivot };
                inv_pivot[j * nx + kx] = inv;
                prev_upper = off * inv;
                upper[j * nx + kx] = prev_upper;
            }
        }

        let dct_x = DctPlanner::new().plan_dct2(nx);
        Ok(Self {
            grid,
            shift,
            eigen,
            dct_x,
            upper,
            inv_pivot,
            off,
        })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Spectrum of `-Δ_X + c` in cosine-mode order `k_y * n_x + k_x`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen
    }

    /// `(-Δ_X + c) u`.
    pub fn apply(&self, u: &FieldV) -> FieldV {
        let mut out = calculus::laplacian(u);
        out.scale(-1.0);
        out.axpy(self.shift, u);
        out
    }

    pub fn solve(&self, rhs: &FieldV) -> Result<FieldV> {
        if !rhs.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let n = rhs.n();
        let mut out = FieldV::zeros(*rhs.grid(), n);
        let mut buf = Vec::new();
        for k in 0..n {
            buf.clear();
            buf.extend(rhs.as_slice().iter().skip(k).step_by(n));
            self.check_compatible(k, &buf)?;
            self.solve_scalar_in_place(&mut buf);
            out.set_component(k, &buf);
        }
        Ok(out)
    }

    fn check_compatible(&self, component: usize, values: &[f64]) -> Result<()> {
        if self.shift > 0.0 {
            return Ok(());
        }
        let mass: f64 = values.iter().sum();
        let total: f64 = values.iter().map(|x| x.abs()).sum();
        if total > 0.0 && mass.abs() > COMPAT_TOL * total {
            return Err(Error::IncompatibleRhs {
                component,
                mass: mass * self.grid.cell_area(),
                relative: mass.abs() / total,
            });
        }
        Ok(())
    }

    /// Solves one scalar component stored as `j * n_x + i`. With `c = 0` the
    /// zero mode is pinned, which returns the zero-mean solution; the
    /// compatibility of `buf` is the caller's responsibility.
    pub fn solve_scalar_in_place(&self, buf: &mut [f64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        assert_eq!(buf.len(), nx * ny);
        let mut scratch = vec![0.0; self.dct_x.get_scratch_len()];
        if nx > 1 {
            for row in buf.chunks_exact_mut(nx) {
                self.dct_x.process_dct2_with_scratch(row, &mut scratch);
            }
        }

        // Forward elimination, then back substitution, one row of modes at a time.
        let off = self.off;
        for j in 0..ny {
            let (done, rest) = buf.split_at_mut(j * nx);
            let row = &mut rest[..nx];
            let inv = &self.inv_pivot[j * nx..(j + 1) * nx];
            if j == 0 {
                row.iter_mut().zip(inv).for_each(|(b, p)| *b *= p);
            } else {
                let prev = &done[(j - 1) * nx..];
                for ((b, p), q) in row.iter_mut().zip(inv).zip(prev) {
                    *b = (*b - off * q) * p;
                }
            }
        }
        for j in (0..ny.saturating_sub(1)).rev() {
            let (head, tail) = buf.split_at_mut((j + 1) * nx);
            let row = &mut head[j * nx..];
            let up = &self.upper[j * nx..(j + 1) * nx];
            for ((b, u), x) in row.iter_mut().zip(up).zip(&tail[..nx]) {
                *b -= u * x;
            }
        }
        if self.shift == 0.0 && ny > 1 {
            let mean = (0..ny).map(|j| buf[j * nx]).sum::<f64>() / ny as f64;
            (0..ny).for_each(|j| buf[j * nx] -= mean);
        }

        if nx > 1 {
            let norm = 2.0 / nx as f64;
            for row in buf.chunks_exact_mut(nx) {
                self.dct_x.process_dct3_with_scratch(row, &mut scratch);
                row.iter_mut().for_each(|x| *x *= norm);
            }
        }
    }
}

pub fn poisson_solve(plan: &PoissonPlan, rhs: &FieldV) -> Result<FieldV> {
    plan.solve(rhs)
}
