//! Lifts from signed two-component signals to cone-valued fields.
//!
//! Both lifts produce `n = 3` fields. The Pauli lift is written directly in
//! Lorentz coordinates `(v_x, v_z, |v|)`, the tensor lift in symmetric-matrix
//! coordinates `(v_x^2, v_x v_z, v_z^2)`; [`sym2_to_lorentz`] converts the
//! latter so that both can be fed to the same Lorentz-cone transport problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldV;
use crate::grid::Grid2;

/// Jacobians of `alpha = |v|` use `v / max(alpha, ALPHA_FLOOR)`.
pub const ALPHA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SignedSignal2 {
    grid: Grid2,
    vx: Vec<f64>,
    vz: Vec<f64>,
}

impl SignedSignal2 {
    pub fn new(grid: Grid2, vx: Vec<f64>, vz: Vec<f64>) -> Result<Self> {
        for c in [&vx, &vz] {
            if c.len() != grid.n_sites() {
                return Err(Error::DimensionMismatch {
                    expected: grid.n_sites(),
                    got: c.len(),
                });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("signal".into()));
            }
        }
        Ok(Self { grid, vx, vz })
    }

    pub fn zeros(grid: Grid2) -> Self {
        Self {
            grid,
            vx: vec![0.0; grid.n_sites()],
            vz: vec![0.0; grid.n_sites()],
        }
    }

    /// Interprets a two-component field as `(v_x, v_z)`.
    pub fn from_field(field: &FieldV) -> Result<Self> {
        if field.n() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: field.n(),
            });
        }
        Self::new(*field.grid(), field.component(0), field.component(1))
    }

    pub fn to_field(&self) -> FieldV {
        FieldV::from_components(self.grid, &[&self.vx, &self.vz]).expect("shapes checked on construction")
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn vx(&self) -> &[f64] {
        &self.vx
    }

    pub fn vz(&self) -> &[f64] {
        &self.vz
    }

    pub fn with_grid(self, grid: Grid2) -> Result<Self> {
        if !grid.same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, ..self })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            vx: self.vx.iter().map(|x| a * x).collect(),
            vz: self.vz.iter().map(|x| a * x).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vx.iter().chain(&self.vz).fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftKind {
    #[default]
    Pauli,
    Tensor,
}

impl std::str::FromStr for LiftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pauli" => Ok(LiftKind::Pauli),
            "tensor" => Ok(LiftKind::Tensor),
            other => Err(Error::InvalidParameter(format!("unknown lift `{other}`"))),
        }
    }
}

#[inline]
pub fn pauli(vx: f64, vz: f64) -> [f64; 3] {
    [vx, vz, vx.hypot(vz)]
}

/// Rows `d(v_x, v_z, alpha)/d(v_x, v_z)`.
#[inline]
pub fn pauli_jacobian(vx: f64, vz: f64) -> [[f64; 2]; 3] {
    let a = vx.hypot(vz).max(ALPHA_FLOOR);
    [[1.0, 0.0], [0.0, 1.0], [vx / a, vz / a]]
}

#[inline]
pub fn tensor(vx: f64, vz: f64) -> [f64; 3] {
    [vx * vx, vx * vz, vz * vz]
}

/// `[[a, b], [b, c]] -> ((a - c)/2, b, (a + c)/2)`; maps the PSD cone onto the
/// Lorentz cone.
#[inline]
pub fn sym2_to_lorentz(m: [f64; 3]) -> [f64; 3] {
    [0.5 * (m[0] - m[2]), m[1], 0.5 * (m[0] + m[2])]
}

pub fn lift_pauli(s: &SignedSignal2) -> FieldV {
    let mut out = FieldV::zeros(s.grid, 3);
    for (site, (&x, &z)) in s.vx.iter().zip(&s.vz).enumerate() {
        out.site_mut(site).copy_from_slice(&pauli(x, z));
    }
    out
}

/// Drops the third coordinate of a Pauli-lifted field.
pub fn unlift_pauli(f: &FieldV) -> Result<SignedSignal2> {
    if f.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: f.n(),
        });
    }
    SignedSignal2::new(*f.grid(), f.component(0), f.component(1))
}

pub fn lift_tensor(s: &SignedSignal2) -> FieldV {
    let mut out = FieldV::zeros(s.grid, 3);
    for (site, (&x, &z)) in s.vx.iter().zip(&s.vz).enumerate() {
        out.site_mut(site).copy_from_slice(&tensor(x, z));
    }
    out
}

/// Lift into Lorentz coordinates, ready for a `Cone::Lorentz3` problem.
pub fn lift_lorentz(s: &SignedSignal2, kind: LiftKind) -> FieldV {
    match kind {
        LiftKind::Pauli => lift_pauli(s),
        LiftKind::Tensor => {
            let mut f = lift_tensor(s);
            for site in f.as_mut_slice().chunks_exact_mut(3) {
                let l = sym2_to_lorentz([site[0], site[1], site[2]]);
                site.copy_from_slice(&l);
            }
            f
        }
    }
}

/// Pulls a covector on the Lorentz-lifted field back to `(d/dv_x, d/dv_z)`.
pub fn lift_lorentz_vjp(s: &SignedSignal2, kind: LiftKind, cotangent: &FieldV) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; s.vx.len()];
    let mut gz = vec![0.0; s.vz.len()];
    for site in 0..s.vx.len() {
        let (x, z) = (s.vx[site], s.vz[site]);
        let c = cotangent.site(site);
        let jac = match kind {
            LiftKind::Pauli => pauli_jacobian(x, z),
            // d/dv of ((x^2 - z^2)/2, x z, (x^2 + z^2)/2)
            LiftKind::Tensor => [[x, -z], [z, x], [x, z]],
        };
        for (row, ck) in jac.iter().zip(c) {
            gx[site] += row[0] * ck;
            gz[site] += row[1] * ck;
        }
    }
    (gx, gz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{in_cone, Cone};
    use proptest::prelude::*;

    #[test]
    fn pauli_examples() {
        assert_eq!(pauli(0.0, 0.0), [0.0, 0.0, 0.0]);
        assert_eq!(pauli(1.0, 0.0), [1.0, 0.0, 1.0]);
        assert_eq!(pauli(3.0, 4.0), [3.0, 4.0, 5.0]);
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(tensor(0.0, 0.0), [0.0, 0.0, 0.0]);
        assert_eq!(tensor(1.0, 0.0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn pauli_jacobian_at_three_four() {
        let j = pauli_jacobian(3.0, 4.0);
        assert_eq!(j[0], [1.0, 0.0]);
        assert_eq!(j[1], [0.0, 1.0]);
        assert!((j[2][0] - 0.6).abs() < 1e-15 && (j[2][1] - 0.8).abs() < 1e-15);
        // Subgradient choice at the apex.
        assert_eq!(pauli_jacobian(0.0, 0.0)[2], [0.0, 0.0]);
    }

    #[test]
    fn field_lifts_and_roundtrip() {
        let g = Grid2::new(4, 3, 1.0, 1.0).unwrap();
        let vx: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7).sin()).collect();
        let vz: Vec<f64> = (0..12).map(|k| (k as f64 * 1.3).cos()).collect();
        let s = SignedSignal2::new(g, vx, vz).unwrap();
        let lifted = lift_pauli(&s);
        for site in 0..12 {
            assert!(in_cone(lifted.site(site), Cone::Lorentz3).unwrap());
        }
        assert_eq!(unlift_pauli(&lifted).unwrap(), s);
        let t = lift_lorentz(&s, LiftKind::Tensor);
        for site in 0..12 {
            assert!(in_cone(t.site(site), Cone::Lorentz3).unwrap());
        }
    }

    #[test]
    fn shape_mismatch() {
        let g = Grid2::new(4, 3, 1.0, 1.0).unwrap();
        assert!(SignedSignal2::new(g, vec![0.0; 12], vec![0.0; 11]).is_err());
    }

    proptest! {
        #[test]
        fn tensor_lift_is_sign_invariant(a in -1e3..1e3f64, b in -1e3..1e3f64) {
            prop_assert_eq!(tensor(a, b), tensor(-a, -b));
        }

        #[test]
        fn lifts_land_in_cone(a in -1e3..1e3f64, b in -1e3..1e3f64) {
            prop_assert!(in_cone(&pauli(a, b), Cone::Lorentz3).unwrap());
            prop_assert!(in_cone(&sym2_to_lorentz(tensor(a, b)), Cone::Lorentz3).unwrap());
        }

        #[test]
        fn vjp_matches_finite_differences(a in -3.0..3.0f64, b in -3.0..3.0f64, w in proptest::collection::vec(-1.0..1.0f64, 3)) {
            prop_assume!(a.hypot(b) > 1e-2);
            let g = Grid2::new(1, 1, 1.0, 1.0).unwrap();
            for kind in [LiftKind::Pauli, LiftKind::Tensor] {
                let s = SignedSignal2::new(g, vec![a], vec![b]).unwrap();
                let cot = FieldV::from_vec(g, 3, w.clone()).unwrap();
                let (gx, gz) = lift_lorentz_vjp(&s, kind, &cot);
                let f = |x: f64, z: f64| {
                    let s = SignedSignal2::new(g, vec![x], vec![z]).unwrap();
                    crate::vector::dot(lift_lorentz(&s, kind).as_slice(), &w)
                };
                let e = 1e-6;
                let fx = (f(a + e, b) - f(a - e, b)) / (2.0 * e);
                let fz = (f(a, b + e) - f(a, b - e)) / (2.0 * e);
                prop_assert!((fx - gx[0]).abs() < 1e-6);
                prop_assert!((fz - gz[0]).abs() < 1e-6);
            }
        }
    }
}
