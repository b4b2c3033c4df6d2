//! The value space `V = R^n`, its cones and the two norms on `V^d` (`d = 2`).
//!
//! A `V^d` value is stored as `n * 2` contiguous reals with the axis index
//! fastest: entry `k * 2 + l` is component `k` differentiated along axis `l`.
//! Seen as a linear map `R^2 -> V` this is the `2 x n` matrix `M[l][k]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of every grid in this crate.
pub const D: usize = 2;

/// Absolute tolerance used by cone membership tests.
pub const TOL_CONE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cone {
    None,
    NonNegOrthant,
    /// `{(x, z, t) : sqrt(x^2 + z^2) <= t}`, the image of the 2x2 PSD cone.
    Lorentz3,
}

/// Norm used for the pointwise constraint on `V^d` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VdNorm {
    #[default]
    Frobenius,
    Operator,
}

impl std::str::FromStr for VdNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frobenius" | "fro" => Ok(VdNorm::Frobenius),
            "operator" | "op" | "spectral" => Ok(VdNorm::Operator),
            other => Err(Error::InvalidParameter(format!("unknown V^d norm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorModel {
    n: usize,
    cone: Cone,
    vd_norm: VdNorm,
}

impl VectorModel {
    pub fn new(n: usize, cone: Cone, vd_norm: VdNorm) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension of V must be positive".into()));
        }
        if cone == Cone::Lorentz3 && n != 3 {
            return Err(Error::InvalidParameter(format!(
                "the Lorentz cone lives in dimension 3, got n = {n}"
            )));
        }
        Ok(Self { n, cone, vd_norm })
    }

    pub fn scalar() -> Self {
        Self {
            n: 1,
            cone: Cone::NonNegOrthant,
            vd_norm: VdNorm::Frobenius,
        }
    }

    pub fn lorentz() -> Self {
        Self {
            n: 3,
            cone: Cone::Lorentz3,
            vd_norm: VdNorm::Frobenius,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cone(&self) -> Cone {
        self.cone
    }

    pub fn vd_norm(&self) -> VdNorm {
        self.vd_norm
    }

    pub fn in_cone(&self, u: &[f64]) -> Result<bool> {
        check_len(u, self.n)?;
        in_cone(u, self.cone)
    }

    pub fn norm_vd(&self, m: &[f64]) -> Result<f64> {
        check_len(m, self.n * D)?;
        norm_vd(m, self.vd_norm)
    }
}

fn check_len(u: &[f64], expected: usize) -> Result<()> {
    if u.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: u.len(),
        });
    }
    Ok(())
}

pub fn inner_v(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(v, u.len())?;
    Ok(dot(u, v))
}

pub fn norm_v(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

#[inline]
pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Norm of a `V^d` value; `m.len()` must be a multiple of `D`.
pub fn norm_vd(m: &[f64], which: VdNorm) -> Result<f64> {
    if m.is_empty() || m.len() % D != 0 {
        return Err(Error::DimensionMismatch {
            expected: D * (m.len() / D).max(1),
            got: m.len(),
        });
    }
    Ok(match which {
        VdNorm::Frobenius => norm_v(m),
        VdNorm::Operator => singular_values(m)[0],
    })
}

/// Dual norm of [`norm_vd`]: Frobenius is self-dual, the operator norm is
/// dual to the nuclear (trace) norm.
pub fn dual_norm_vd(m: &[f64], which: VdNorm) -> f64 {
    match which {
        VdNorm::Frobenius => norm_v(m),
        VdNorm::Operator => {
            let s = singular_values(m);
            s[0] + s[1]
        }
    }
}

/// Entries `(g00, g01, g11)` of the Gram matrix `M M^T` of a `2 x n` block.
#[inline]
fn gram(m: &[f64]) -> (f64, f64, f64) {
    let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
    for pair in m.chunks_exact(D) {
        g00 += pair[0] * pair[0];
        g01 += pair[0] * pair[1];
        g11 += pair[1] * pair[1];
    }
    (g00, g01, g11)
}

/// Eigen-decomposition of the symmetric matrix `[[a, b], [b, c]]`.
/// Returns eigenvalues in decreasing order and the unit eigenvector of the
/// largest one; the second eigenvector is its rotation by 90 degrees.
#[inline]
fn sym2_eigen(a: f64, b: f64, c: f64) -> ([f64; 2], [f64; 2]) {
    let half_tr = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let rad = half_diff.hypot(b);
    let l1 = half_tr + rad;
    let l2 = half_tr - rad;
    // Angle of the leading eigenvector; atan2 is well defined even when b = 0.
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    ([l1, l2], [theta.cos(), theta.sin()])
}

/// Singular values of a `2 x n` block, largest first.
pub fn singular_values(m: &[f64]) -> [f64; 2] {
    let (g00, g01, g11) = gram(m);
    let ([l1, l2], _) = sym2_eigen(g00, g01, g11);
    [l1.max(0.0).sqrt(), l2.max(0.0).sqrt()]
}

pub fn in_cone(u: &[f64], cone: Cone) -> Result<bool> {
    Ok(match cone {
        Cone::None => true,
        Cone::NonNegOrthant => u.iter().all(|&x| x >= -TOL_CONE),
        Cone::Lorentz3 => {
            check_len(u, 3)?;
            u[0].hypot(u[1]) <= u[2] + TOL_CONE
        }
    })
}

/// Radial projection onto the Euclidean ball of the given radius.
#[inline]
pub(crate) fn project_euclidean(u: &mut [f64], radius: f64) {
    let nrm = norm_v(u);
    if nrm > radius {
        let s = radius / nrm;
        u.iter_mut().for_each(|x| *x *= s);
    }
}

/// Orthogonal (Frobenius) projection of a `2 x n` block onto the operator-norm
/// ball: singular values are clamped at `radius`.
///
/// With `M M^T = U diag(s^2) U^T` the projection is `U diag(min(1, r/s)) U^T M`,
/// which avoids forming the right singular vectors.
#[inline]
pub(crate) fn project_operator(m: &mut [f64], radius: f64) {
    let (g00, g01, g11) = gram(m);
    let r2 = radius * radius;
    // Fast exit: the largest eigenvalue of the Gram matrix is at most its trace.
    if g00 + g11 <= r2 {
        return;
    }
    let ([l1, l2], [c, s]) = sym2_eigen(g00, g01, g11);
    if l1 <= r2 {
        return;
    }
    let f1 = radius / l1.sqrt();
    let f2 = if l2 > r2 { radius / l2.sqrt() } else { 1.0 };
    // P = f1 u1 u1^T + f2 u2 u2^T with u1 = (c, s), u2 = (-s, c).
    let p00 = f1 * c * c + f2 * s * s;
    let p01 = (f1 - f2) * c * s;
    let p11 = f1 * s * s + f2 * c * c;
    for pair in m.chunks_exact_mut(D) {
        let (x, y) = (pair[0], pair[1]);
        pair[0] = p00 * x + p01 * y;
        pair[1] = p01 * x + p11 * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn rank_one_norms_coincide() {
        // (1, 0) in V times (0.6, 0.8) in R^2, stored axis-fastest.
        let m = [0.6, 0.8, 0.0, 0.0];
        assert!((norm_vd(&m, VdNorm::Frobenius).unwrap() - 1.0).abs() < EPS);
        assert!((norm_vd(&m, VdNorm::Operator).unwrap() - 1.0).abs() < EPS);

        let m = [3.0, 4.0];
        assert!((norm_vd(&m, VdNorm::Frobenius).unwrap() - 5.0).abs() < EPS);
        assert!((norm_vd(&m, VdNorm::Operator).unwrap() - 5.0).abs() < EPS);
    }

    #[test]
    fn identity_block() {
        let m = [1.0, 0.0, 0.0, 1.0];
        let fro = norm_vd(&m, VdNorm::Frobenius).unwrap();
        let op = norm_vd(&m, VdNorm::Operator).unwrap();
        assert!((fro - 2f64.sqrt()).abs() < EPS);
        assert!((op - 1.0).abs() < EPS);
        assert!(op <= fro && fro <= 2f64.sqrt() * op + EPS);
    }

    #[test]
    fn dimension_errors() {
        assert!(inner_v(&[1.0, 2.0], &[1.0]).is_err());
        assert!(norm_vd(&[1.0, 2.0, 3.0], VdNorm::Frobenius).is_err());
        assert!(in_cone(&[1.0, 2.0], Cone::Lorentz3).is_err());
        assert!(VectorModel::new(2, Cone::Lorentz3, VdNorm::Frobenius).is_err());
        assert!(VectorModel::new(0, Cone::None, VdNorm::Frobenius).is_err());
        assert!(VectorModel::lorentz().in_cone(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn lorentz_membership() {
        assert!(in_cone(&[0.0, 0.0, 1.0], Cone::Lorentz3).unwrap());
        assert!(in_cone(&[1.0, 0.0, 1.0], Cone::Lorentz3).unwrap());
        assert!(!in_cone(&[1.0, 0.0, 0.5], Cone::Lorentz3).unwrap());
        assert!(in_cone(&[0.0, -1e-10], Cone::NonNegOrthant).unwrap());
        assert!(!in_cone(&[0.0, -1e-6], Cone::NonNegOrthant).unwrap());
    }

    #[test]
    fn operator_projection_clamps_singular_values() {
        // diag(2, 0.5) with d = n = 2: entry k*2 + l holds M[l][k].
        let mut m = [2.0, 0.0, 0.0, 0.5];
        project_operator(&mut m, 1.0);
        for (a, b) in m.iter().zip([1.0, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < EPS, "{m:?}");
        }
    }

    fn lorentz_point() -> impl Strategy<Value = [f64; 3]> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.0..3.0f64)
            .prop_map(|(x, z, extra)| [x, z, x.hypot(z) + extra])
    }

    proptest! {
        #[test]
        fn lorentz_cone_is_self_dual_sample(u in lorentz_point(), v in lorentz_point()) {
            prop_assert!(dot(&u, &v) >= -1e-9);
        }

        #[test]
        fn cone_closed_under_conic_combinations(u in lorentz_point(), v in lorentz_point(), c in 0.0..10.0f64) {
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = u.iter().map(|a| c * a).collect();
            prop_assert!(in_cone(&sum, Cone::Lorentz3).unwrap());
            prop_assert!(in_cone(&scaled, Cone::Lorentz3).unwrap());
        }

        #[test]
        fn norm_ordering(m in proptest::collection::vec(-10.0..10.0f64, 6)) {
            let fro = norm_vd(&m, VdNorm::Frobenius).unwrap();
            let op = norm_vd(&m, VdNorm::Operator).unwrap();
            prop_assert!(op <= fro * (1.0 + 1e-12) + 1e-12);
            prop_assert!(fro <= 2f64.sqrt() * op * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn operator_projection_lands_in_ball_and_is_idempotent(
            m in proptest::collection::vec(-4.0..4.0f64, 6),
            r in 0.1..3.0f64,
        ) {
            let mut p = m.clone();
            project_operator(&mut p, r);
            prop_assert!(singular_values(&p)[0] <= r * (1.0 + 1e-9));
            let mut q = p.clone();
            project_operator(&mut q, r);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            // Optimality of the projection: <M - P, B - P> <= 0 for B in the ball.
            let mut b = m.iter().map(|x| x * 0.3).collect::<Vec<_>>();
            project_operator(&mut b, r);
            let lhs: f64 = m.iter().zip(&p).zip(&b).map(|((mi, pi), bi)| (mi - pi) * (bi - pi)).sum();
            prop_assert!(lhs <= 1e-8);
        }
    }
}
