//! Closed-form costs for transport between two Dirac masses, a brute-force
//! Fermat–Torricelli reference, and rasterization onto grids.
//!
//! Costs are those of the unbalanced problem
//! `sup { <φ, ν - μ> - F(φ) : |∇φ| <= 1 }` with `μ = M_1 δ_{x_1}`,
//! `ν = M_2 δ_{x_2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldV;
use crate::grid::Grid2;
use crate::sdmm::{Power, TransportProblem};
use crate::vector::{dot, norm_v};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Q1Vector,
    Q1Scalar,
    Q2Scalar1d,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q1_vector" | "q1-vector" => Ok(Variant::Q1Vector),
            "q1_scalar" | "q1-scalar" => Ok(Variant::Q1Scalar),
            "q2_scalar_1d" | "q2-scalar-1d" => Ok(Variant::Q2Scalar1d),
            other => Err(Error::InvalidParameter(format!("unknown oracle variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Both masses are destroyed and created in place.
    NoTransport,
    /// `|M_1|` is transported, the rest is created at `x_2`.
    TransportFirst,
    /// `|M_2|` is transported, the rest is destroyed at `x_1`.
    TransportSecond,
    /// Interior Fermat–Torricelli point.
    Interior,
    ZeroFirst,
    ZeroSecond,
    EqualMasses,
    Coincident,
    /// `q = 2`: one hat centered at the larger mass covers the other point.
    Dominated,
    /// `q = 2`: two hats whose supports touch.
    Shared,
    /// `q = 2`: two separate hats, no transport.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub cost: f64,
    pub branch: Branch,
    /// Potential heights `-φ(x_1)` and `φ(x_2)` for the `q = 2` oracle.
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl OracleValue {
    fn cost(cost: f64, branch: Branch) -> Self {
        Self {
            cost,
            branch,
            a: None,
            b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoDeltaInstance {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub lambda: f64,
    pub variant: Variant,
}

impl TwoDeltaInstance {
    pub fn distance(&self) -> f64 {
        (self.x1[0] - self.x2[0]).hypot(self.x1[1] - self.x2[1])
    }

    fn validate(&self) -> Result<()> {
        if self.m1.len() != self.m2.len() || self.m1.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: self.m1.len().max(1),
                got: self.m2.len(),
            });
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda = {} must be positive", self.lambda)));
        }
        let finite = self.x1.iter().chain(&self.x2).chain(&self.m1).chain(&self.m2).all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("two-delta instance".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<OracleValue> {
        match self.variant {
            Variant::Q1Vector => oracle_q1_vector(self),
            Variant::Q1Scalar => oracle_q1_scalar(self),
            Variant::Q2Scalar1d => oracle_q2_scalar_1d(self),
        }
    }
}

pub fn oracle_q1_vector(inst: &TwoDeltaInstance) -> Result<OracleValue> {
    inst.validate()?;
    let (c, b) = q1_vector_cost(&inst.m1, &inst.m2, inst.lambda, inst.distance());
    Ok(OracleValue::cost(c, b))
}

/// Closed form of `dist * min_C γ|C - M_1| + γ|C - M_2| + |C|`, `γ = λ / dist`.
///
/// The vertex branches test the angle at `M_i` against `1/(2γ)`: the weighted
/// unit vectors pulling away from `M_1` have norm at most `γ` exactly when
/// `<M_1, M_2 - M_1> / (|M_1| |M_2 - M_1|) >= 1/(2γ)`.
pub fn q1_vector_cost(m1: &[f64], m2: &[f64], lambda: f64, dist: f64) -> (f64, Branch) {
    let (n1, n2) = (norm_v(m1), norm_v(m2));
    let d12: Vec<f64> = m2.iter().zip(m1).map(|(b, a)| b - a).collect();
    let nd = norm_v(&d12);
    if n2 == 0.0 {
        return (lambda * n1, Branch::ZeroSecond);
    }
    if n1 == 0.0 {
        return (lambda * n2, Branch::ZeroFirst);
    }
    if nd == 0.0 {
        return ((2.0 * lambda).min(dist) * n1, Branch::EqualMasses);
    }
    if dist == 0.0 {
        return (lambda * nd, Branch::Coincident);
    }
    let gamma = lambda / dist;
    let cos12 = dot(m1, m2) / (n1 * n2);
    if cos12 <= 1.0 / (2.0 * gamma * gamma) - 1.0 {
        return (lambda * (n1 + n2), Branch::NoTransport);
    }
    let vertex = 1.0 / (2.0 * gamma);
    if dot(m1, &d12) / (n1 * nd) >= vertex {
        return (dist * n1 + lambda * nd, Branch::TransportFirst);
    }
    if -dot(m2, &d12) / (n2 * nd) >= vertex {
        return (dist * n2 + lambda * nd, Branch::TransportSecond);
    }
    let cross = (n1 * n1 * n2 * n2 - dot(m1, m2).powi(2)).max(0.0);
    let g2 = gamma * gamma;
    let inner = (g2 - 0.5) * nd * nd + 0.5 * (n1 * n1 + n2 * n2) + (4.0 * g2 - 1.0).max(0.0).sqrt() * cross.sqrt();
    (dist * inner.max(0.0).sqrt(), Branch::Interior)
}

/// `dist * min_C γ|C - M_1| + γ|C - M_2| + |C|` by dense sampling of the plane
/// through `0, M_1, M_2` followed by repeated zooming.
pub fn fermat_torricelli_brute(m1: &[f64], m2: &[f64], lambda: f64, dist: f64) -> f64 {
    if dist == 0.0 {
        let d: Vec<f64> = m1.iter().zip(m2).map(|(a, b)| a - b).collect();
        return lambda * norm_v(&d);
    }
    let gamma = lambda / dist;
    // Orthonormal basis of span{M_1, M_2}.
    let basis = plane_basis(m1, m2);
    let coords = |m: &[f64]| [dot(m, &basis[0]), dot(m, &basis[1])];
    let (p1, p2) = (coords(m1), coords(m2));
    let f = |x: f64, y: f64| {
        gamma * (x - p1[0]).hypot(y - p1[1]) + gamma * (x - p2[0]).hypot(y - p2[1]) + x.hypot(y)
    };
    let mut best = f(0.0, 0.0).min(f(p1[0], p1[1])).min(f(p2[0], p2[1]));
    let xs = [0.0, p1[0], p2[0]];
    let ys = [0.0, p1[1], p2[1]];
    let (lx, hx) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
    let (ly, hy) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
    let mut centre = [(lx + hx) / 2.0, (ly + hy) / 2.0];
    let mut half = ((hx - lx).max(hy - ly) / 2.0).max(1e-12);
    const SAMPLES: usize = 48;
    for _ in 0..80 {
        let mut arg = centre;
        let mut val = f64::INFINITY;
        for a in 0..=SAMPLES {
            for b in 0..=SAMPLES {
                let x = centre[0] - half + 2.0 * half * a as f64 / SAMPLES as f64;
                let y = centre[1] - half + 2.0 * half * b as f64 / SAMPLES as f64;
                let v = f(x, y);
                if v < val {
                    val = v;
                    arg = [x, y];
                }
            }
        }
        best = best.min(val);
        centre = arg;
        half *= 0.5;
    }
    dist * best
}

fn plane_basis(m1: &[f64], m2: &[f64]) -> [Vec<f64>; 2] {
    let n = m1.len();
    let mut e1 = if norm_v(m1) > 0.0 { m1.to_vec() } else { m2.to_vec() };
    let l1 = norm_v(&e1);
    if l1 == 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        e1 = e;
    } else {
        e1.iter_mut().for_each(|x| *x /= l1);
    }
    let other = if norm_v(m1) > 0.0 { m2 } else { m1 };
    let proj = dot(other, &e1);
    let mut e2: Vec<f64> = other.iter().zip(&e1).map(|(o, e)| o - proj * e).collect();
    let l2 = norm_v(&e2);
    if l2 > 1e-14 * norm_v(other).max(1e-300) {
        e2.iter_mut().for_each(|x| *x /= l2);
    } else {
        e2 = vec![0.0; n];
    }
    [e1, e2]
}

pub fn oracle_q1_scalar(inst: &TwoDeltaInstance) -> Result<OracleValue> {
    inst.validate()?;
    if inst.m1.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: inst.m1.len(),
        });
    }
    let (c, b) = q1_scalar_cost(inst.m1[0], inst.m2[0], inst.lambda, inst.distance());
    Ok(OracleValue::cost(c, b))
}

pub fn q1_scalar_cost(m1: f64, m2: f64, lambda: f64, dist: f64) -> (f64, Branch) {
    let no_transport = if dist == 0.0 { false } else { lambda / dist <= 0.5 };
    if no_transport || m1 * m2 < 0.0 {
        return (lambda * (m1.abs() + m2.abs()), Branch::NoTransport);
    }
    if m2.abs() >= m1.abs() {
        (lambda * (m2.abs() - m1.abs()) + dist * m1.abs(), Branch::TransportFirst)
    } else {
        (lambda * (m1.abs() - m2.abs()) + dist * m2.abs(), Branch::TransportSecond)
    }
}

pub fn oracle_q2_scalar_1d(inst: &TwoDeltaInstance) -> Result<OracleValue> {
    inst.validate()?;
    if inst.m1.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: inst.m1.len(),
        });
    }
    let (m1, m2) = (inst.m1[0], inst.m2[0]);
    if m1 < 0.0 || m2 < 0.0 {
        return Err(Error::InvalidParameter("the q = 2 oracle needs nonnegative masses".into()));
    }
    Ok(q2_scalar_1d(m1, m2, inst.lambda, inst.distance()))
}

/// Hat heights and dual value. Heights refer to the hats at `x_1` and `x_2`
/// whatever the ordering of the masses.
pub fn q2_scalar_1d(m1: f64, m2: f64, lambda: f64, dist: f64) -> OracleValue {
    if m1 < m2 {
        let v = q2_scalar_1d(m2, m1, lambda, dist);
        return OracleValue {
            a: v.b,
            b: v.a,
            ..v
        };
    }
    let (a, b, branch) = if lambda * (m1.sqrt() + m2.sqrt()).powi(2) <= dist * dist {
        ((lambda * m1).sqrt(), (lambda * m2).sqrt(), Branch::Separate)
    } else if lambda * (m1 - m2) >= dist * dist {
        let a = (lambda * (m1 - m2)).sqrt();
        (a, dist - a, Branch::Dominated)
    } else {
        let s = lambda * (m1 - m2) / (2.0 * dist);
        (dist / 2.0 + s, dist / 2.0 - s, Branch::Shared)
    };
    let cubic = match branch {
        Branch::Dominated => a.powi(3),
        _ => a.powi(3) + b.powi(3),
    };
    OracleValue {
        cost: a * m1 + b * m2 - cubic / (3.0 * lambda),
        branch,
        a: Some(a),
        b: Some(b),
    }
}

#[derive(Debug, Clone)]
pub struct Rasterized {
    pub problem: TransportProblem,
    /// Node positions the masses were snapped to.
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Rasterized {
    /// The instance with its points moved to the snapped nodes.
    pub fn snapped(&self, inst: &TwoDeltaInstance) -> TwoDeltaInstance {
        TwoDeltaInstance {
            x1: self.x1,
            x2: self.x2,
            ..inst.clone()
        }
    }
}

/// Deposits `M_1` (into `μ`) and `M_2` (into `ν`) at the nearest nodes with
/// density `M / (h_x h_y)`.
pub fn rasterize_two_delta(inst: &TwoDeltaInstance, grid: &Grid2) -> Result<Rasterized> {
    inst.validate()?;
    let n = inst.m1.len();
    let (i1, j1) = grid.nearest_node(inst.x1[0], inst.x1[1])?;
    let (i2, j2) = grid.nearest_node(inst.x2[0], inst.x2[1])?;
    let w = 1.0 / grid.cell_area();
    let mut mu = FieldV::zeros(*grid, n);
    let mut nu = FieldV::zeros(*grid, n);
    for (dst, m) in mu.site_mut(grid.site(i1, j1)).iter_mut().zip(&inst.m1) {
        *dst = m * w;
    }
    for (dst, m) in nu.site_mut(grid.site(i2, j2)).iter_mut().zip(&inst.m2) {
        *dst = m * w;
    }
    let q = match inst.variant {
        Variant::Q2Scalar1d => Power::Two,
        _ => Power::One,
    };
    let (a, b) = (grid.coords(i1, j1), grid.coords(i2, j2));
    Ok(Rasterized {
        problem: TransportProblem::new(mu, nu, inst.lambda, Power::One, q)?,
        x1: [a.0, a.1],
        x2: [b.0, b.1],
    })
}
