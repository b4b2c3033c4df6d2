use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform Cartesian grid on `[a_x, b_x] x [a_y, b_y]`.
///
/// Sites are numbered `s = j * nx + i` (x fastest). An axis with a single
/// node is allowed and represents a 1D problem; its mesh size then acts as a
/// unit quadrature weight and all differences along it vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    ax: f64,
    ay: f64,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Self> {
        Self::with_origin(nx, ny, hx, hy, 0.0, 0.0)
    }

    pub fn with_origin(nx: usize, ny: usize, hx: f64, hy: f64, ax: f64, ay: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid(format!("empty grid {nx}x{ny}")));
        }
        for (name, h) in [("hx", hx), ("hy", hy)] {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {h} must be positive")));
            }
        }
        if !(ax.is_finite() && ay.is_finite()) {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            ax,
            ay,
        })
    }

    /// Grid with `nx x ny` nodes spanning `[ax, bx] x [ay, by]` (both ends included).
    pub fn from_extent(ax: f64, bx: f64, nx: usize, ay: f64, by: f64, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "an extent needs at least 2 nodes per axis, got {nx}x{ny}"
            )));
        }
        if !(bx > ax && by > ay) {
            return Err(Error::InvalidGrid("empty extent".into()));
        }
        Self::with_origin(
            nx,
            ny,
            (bx - ax) / (nx - 1) as f64,
            (by - ay) / (ny - 1) as f64,
            ax,
            ay,
        )
    }

    /// 1D grid of `n` nodes on `[a, b]`, stored as an `n x 1` grid.
    pub fn line(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || b <= a {
            return Err(Error::InvalidGrid(format!("bad line [{a}, {b}] with {n} nodes")));
        }
        Self::with_origin(n, 1, (b - a) / (n - 1) as f64, 1.0, a, 0.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.ax, self.ay)
    }

    pub fn n_sites(&self) -> usize {
        self.nx * self.ny
    }

    /// Quadrature weight of every site.
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Lengths `(b_x - a_x, b_y - a_y)`; zero along a single-node axis.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.hx * (self.nx - 1) as f64,
            self.hy * (self.ny - 1) as f64,
        )
    }

    #[inline]
    pub fn site(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, site: usize) -> (usize, usize) {
        (site % self.nx, site / self.nx)
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.ax + i as f64 * self.hx, self.ay + j as f64 * self.hy)
    }

    /// Nearest node to a point of the closed domain.
    pub fn nearest_node(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        let (lx, ly) = self.extent();
        let tol = 1e-12 * (1.0 + lx.max(ly));
        let (rx, ry) = (x - self.ax, y - self.ay);
        if !(rx >= -tol && rx <= lx + tol && ry >= -tol && ry <= ly + tol) {
            return Err(Error::OutsideDomain { x, y });
        }
        let i = ((rx / self.hx).round().max(0.0) as usize).min(self.nx - 1);
        let j = ((ry / self.hy).round().max(0.0) as usize).min(self.ny - 1);
        Ok((i, j))
    }

    /// Same node layout with both mesh sizes multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_origin(
            self.nx,
            self.ny,
            self.hx * factor,
            self.hy * factor,
            self.ax * factor,
            self.ay * factor,
        )
    }

    pub fn same_shape(&self, other: &Grid2) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }
}
