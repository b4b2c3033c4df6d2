//! Grid functions with values in `V` ([`FieldV`]) and `V^d` ([`FieldVd`]).
//!
//! Storage is site-major: the values of one site are contiguous, so every
//! pointwise proximal step walks memory linearly.

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::vector::{self, VdNorm, D};

fn check_finite(data: &[f64], what: &str) -> Result<()> {
    if data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldV {
    grid: Grid2,
    n: usize,
    data: Vec<f64>,
}

impl FieldV {
    pub fn zeros(grid: Grid2, n: usize) -> Self {
        assert!(n > 0, "dimension of V must be positive");
        Self {
            grid,
            n,
            data: vec![0.0; grid.n_sites() * n],
        }
    }

    pub fn from_vec(grid: Grid2, n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension of V must be positive".into()));
        }
        let expected = grid.n_sites() * n;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        check_finite(&data, "field data")?;
        Ok(Self { grid, n, data })
    }

    /// Builds a field by evaluating `f(i, j, out)` at every node.
    pub fn from_fn(grid: Grid2, n: usize, mut f: impl FnMut(usize, usize, &mut [f64])) -> Result<Self> {
        let mut field = Self::zeros(grid, n);
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let s = grid.site(i, j);
                f(i, j, field.site_mut(s));
            }
        }
        check_finite(&field.data, "field data")?;
        Ok(field)
    }

    /// Stacks scalar component fields (each of length `n_sites`) into one field.
    pub fn from_components(grid: Grid2, components: &[&[f64]]) -> Result<Self> {
        let n = components.len();
        let mut data = vec![0.0; grid.n_sites() * n];
        for (k, c) in components.iter().enumerate() {
            if c.len() != grid.n_sites() {
                return Err(Error::DimensionMismatch {
                    expected: grid.n_sites(),
                    got: c.len(),
                });
            }
            for (s, &v) in c.iter().enumerate() {
                data[s * n + k] = v;
            }
        }
        Self::from_vec(grid, n, data)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Raw mutable access; callers are responsible for keeping entries finite.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn site(&self, s: usize) -> &[f64] {
        &self.data[s * self.n..(s + 1) * self.n]
    }

    #[inline]
    pub fn site_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.data[s * self.n..(s + 1) * self.n]
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        self.site(self.grid.site(i, j))
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        assert!(k < self.n);
        self.data.iter().skip(k).step_by(self.n).copied().collect()
    }

    pub fn set_component(&mut self, k: usize, values: &[f64]) {
        assert!(k < self.n && values.len() == self.grid.n_sites());
        for (s, &v) in values.iter().enumerate() {
            self.data[s * self.n + k] = v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn check_compatible(&self, other: &FieldV) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    /// `<u, v>_X = h_x h_y sum_s <u_s, v_s>_V`.
    pub fn dot(&self, other: &FieldV) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.grid.cell_area() * vector::dot(&self.data, &other.data)
    }

    pub fn norm_l2_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_squared().sqrt()
    }

    /// `h_x h_y sum_s |u_s|_V`.
    pub fn norm_l1(&self) -> f64 {
        self.grid.cell_area()
            * self
                .data
                .chunks_exact(self.n)
                .map(vector::norm_v)
                .sum::<f64>()
    }

    pub fn norm_linf(&self) -> f64 {
        self.data
            .chunks_exact(self.n)
            .map(vector::norm_v)
            .fold(0.0, f64::max)
    }

    /// Componentwise `h_x h_y sum_s u_s`.
    pub fn total_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.n];
        for site in self.data.chunks_exact(self.n) {
            for (m, v) in mass.iter_mut().zip(site) {
                *m += v;
            }
        }
        let w = self.grid.cell_area();
        mass.iter_mut().for_each(|m| *m *= w);
        mass
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &FieldV) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &FieldV) -> FieldV {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs_diff(&self, other: &FieldV) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Same values on a different grid of identical shape.
    pub fn with_grid(mut self, grid: Grid2) -> Result<FieldV> {
        if !grid.same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        self.grid = grid;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldVd {
    grid: Grid2,
    n: usize,
    data: Vec<f64>,
}

impl FieldVd {
    pub fn zeros(grid: Grid2, n: usize) -> Self {
        assert!(n > 0, "dimension of V must be positive");
        Self {
            grid,
            n,
            data: vec![0.0; grid.n_sites() * n * D],
        }
    }

    pub fn from_vec(grid: Grid2, n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension of V must be positive".into()));
        }
        let expected = grid.n_sites() * n * D;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        check_finite(&data, "flux data")?;
        Ok(Self { grid, n, data })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of reals per site (`n * d`).
    pub fn site_len(&self) -> usize {
        self.n * D
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn site(&self, s: usize) -> &[f64] {
        let m = self.n * D;
        &self.data[s * m..(s + 1) * m]
    }

    #[inline]
    pub fn site_mut(&mut self, s: usize) -> &mut [f64] {
        let m = self.n * D;
        &mut self.data[s * m..(s + 1) * m]
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        self.site(self.grid.site(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &FieldVd) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.grid.cell_area() * vector::dot(&self.data, &other.data)
    }

    pub fn norm_l2_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_squared().sqrt()
    }

    /// `h_x h_y sum_s |w_s|`, with the site norm dual to `constraint`
    /// (Frobenius for Frobenius, nuclear for the operator norm).
    pub fn norm_l1(&self, constraint: VdNorm) -> f64 {
        self.grid.cell_area()
            * self
                .data
                .chunks_exact(self.n * D)
                .map(|m| vector::dual_norm_vd(m, constraint))
                .sum::<f64>()
    }

    pub fn norm_linf(&self, which: VdNorm) -> f64 {
        self.data
            .chunks_exact(self.n * D)
            .map(|m| vector::norm_vd(m, which).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    pub fn axpy(&mut self, a: f64, other: &FieldVd) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn max_abs_diff(&self, other: &FieldVd) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid2 {
        Grid2::new(3, 2, 0.5, 2.0).unwrap()
    }

    #[test]
    fn layout_and_lengths() {
        let g = grid();
        assert!(FieldV::from_vec(g, 2, vec![0.0; 11]).is_err());
        let f = FieldV::from_fn(g, 2, |i, j, out| {
            out[0] = i as f64;
            out[1] = j as f64;
        })
        .unwrap();
        assert_eq!(f.as_slice().len(), 12);
        assert_eq!(f.at(2, 1), &[2.0, 1.0]);
        assert_eq!(f.component(0), vec![0.0, 1.0, 2.0, 0.0, 1.0, 2.0]);
        let w = FieldVd::zeros(g, 3);
        assert_eq!(w.as_slice().len(), 6 * 3 * 2);
        assert!(FieldVd::from_vec(g, 3, vec![0.0; 35]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let g = grid();
        let mut v = vec![0.0; 6];
        v[3] = f64::NAN;
        assert!(matches!(FieldV::from_vec(g, 1, v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn weighted_norms() {
        let g = grid();
        let f = FieldV::from_vec(g, 2, vec![3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((f.norm_l1() - 6.0).abs() < 1e-14);
        assert!((f.norm_l2_squared() - 26.0).abs() < 1e-14);
        assert_eq!(f.norm_linf(), 5.0);
        assert_eq!(f.total_mass(), vec![3.0, 5.0]);
    }

    #[test]
    fn components_roundtrip() {
        let g = grid();
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        let f = FieldV::from_components(g, &[&a, &b]).unwrap();
        assert_eq!(f.component(0), a.to_vec());
        assert_eq!(f.component(1), b.to_vec());
    }
}
