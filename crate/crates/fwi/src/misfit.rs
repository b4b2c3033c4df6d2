//! Misfits between recorded and observed traces, with their gradients
//! with respect to the recorded samples.

use serde::{Deserialize, Serialize};
use uvot_core::lift::{lift_lorentz, lift_lorentz_vjp};
use uvot_core::{FieldV, LiftKind, Power, SignedSignal2, SolverConfig, TransportProblem};

use crate::error::{FwiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MisfitKind {
    L2,
    T11,
    T12,
    T22,
    /// Scalar `T_{1,1}` of each component, summed.
    Kr,
}

impl std::str::FromStr for MisfitKind {
    type Err = FwiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(MisfitKind::L2),
            "t11" => Ok(MisfitKind::T11),
            "t12" => Ok(MisfitKind::T12),
            "t22" => Ok(MisfitKind::T22),
            "kr" => Ok(MisfitKind::Kr),
            other => Err(FwiError::InvalidModel(format!("unknown misfit `{other}`"))),
        }
    }
}

impl MisfitKind {
    fn powers(self) -> Option<(Power, Power)> {
        match self {
            MisfitKind::T11 | MisfitKind::Kr => Some((Power::One, Power::One)),
            MisfitKind::T12 => Some((Power::One, Power::Two)),
            MisfitKind::T22 => Some((Power::Two, Power::Two)),
            MisfitKind::L2 => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Misfit {
    pub kind: MisfitKind,
    pub lambda: f64,
    pub lift: LiftKind,
    pub solver: SolverConfig,
}

impl Misfit {
    /// Inner solves stop at `eps = 1e-2`, loose enough for a few hundred
    /// iterations per evaluation.
    pub fn new(kind: MisfitKind, lambda: f64) -> Self {
        Self {
            kind,
            lambda,
            lift: LiftKind::Pauli,
            solver: SolverConfig {
                eps: 1e-2,
                max_iter: 20_000,
                auto_tau: true,
                ..SolverConfig::default()
            },
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.solver.eps = eps;
        self
    }
}

#[derive(Debug, Clone)]
pub struct MisfitValue {
    pub cost: f64,
    /// `∂g/∂v_x`, `∂g/∂v_z` per trace sample.
    pub grad_x: Vec<f64>,
    pub grad_z: Vec<f64>,
    /// Total inner solver iterations.
    pub iterations: usize,
}

/// `T(μ, ν)` and `∂T/∂μ = -φ h_x h_y` for the optimal potential `φ`.
fn transport(mu: FieldV, nu: FieldV, m: &Misfit, p: Power, q: Power) -> Result<(f64, FieldV, usize)> {
    let problem = TransportProblem::new(mu, nu, m.lambda, p, q)?;
    let r = uvot_core::solve(&problem, &m.solver)?;
    if !r.converged {
        return Err(FwiError::TransportNotConverged {
            gap: r.gap,
            residual: r.residual,
            iterations: r.iterations,
        });
    }
    let mut grad = r.phi;
    grad.scale(-grad.grid().cell_area());
    Ok((r.cost, grad, r.iterations))
}

/// Misfit of `synthetic` against `observed`, the latter playing the role of
/// the target measure.
pub fn evaluate(m: &Misfit, synthetic: &SignedSignal2, observed: &SignedSignal2) -> Result<MisfitValue> {
    let g = *synthetic.grid();
    if !g.same_shape(observed.grid()) {
        return Err(FwiError::ShapeMismatch(format!(
            "{}x{} against {}x{}",
            g.nx(),
            g.ny(),
            observed.grid().nx(),
            observed.grid().ny()
        )));
    }
    match (m.kind, m.kind.powers()) {
        (MisfitKind::L2, _) => {
            let w = g.cell_area();
            let rx: Vec<f64> = synthetic.vx().iter().zip(observed.vx()).map(|(a, b)| a - b).collect();
            let rz: Vec<f64> = synthetic.vz().iter().zip(observed.vz()).map(|(a, b)| a - b).collect();
            let cost = 0.5 * w * rx.iter().chain(&rz).map(|r| r * r).sum::<f64>();
            Ok(MisfitValue {
                cost,
                grad_x: rx.iter().map(|r| w * r).collect(),
                grad_z: rz.iter().map(|r| w * r).collect(),
                iterations: 0,
            })
        }
        (MisfitKind::Kr, Some((p, q))) => {
            let scalar = |a: &[f64], b: &[f64]| {
                let mu = FieldV::from_vec(g, 1, a.to_vec())?;
                let nu = FieldV::from_vec(g, 1, b.to_vec())?;
                transport(mu, nu, m, p, q)
            };
            let (cx, gx, ix) = scalar(synthetic.vx(), observed.vx())?;
            let (cz, gz, iz) = scalar(synthetic.vz(), observed.vz())?;
            Ok(MisfitValue {
                cost: cx + cz,
                grad_x: gx.into_vec(),
                grad_z: gz.into_vec(),
                iterations: ix + iz,
            })
        }
        (_, Some((p, q))) => {
            let mu = lift_lorentz(synthetic, m.lift);
            let nu = lift_lorentz(observed, m.lift);
            let (cost, cot, iterations) = transport(mu, nu, m, p, q)?;
            let (grad_x, grad_z) = lift_lorentz_vjp(synthetic, m.lift, &cot);
            Ok(MisfitValue {
                cost,
                grad_x,
                grad_z,
                iterations,
            })
        }
        (_, None) => unreachable!("only L2 has no transport exponents"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use uvot_core::Grid2;

    fn signal(g: Grid2, shift: f64) -> SignedSignal2 {
        let n = g.n_sites();
        let vx = (0..n).map(|s| ((s as f64 + shift) * 0.3).sin()).collect();
        let vz = (0..n).map(|s| ((s as f64 - shift) * 0.2).cos()).collect();
        SignedSignal2::new(g, vx, vz).unwrap()
    }

    #[test]
    fn identical_traces_cost_nothing() {
        let g = Grid2::new(6, 10, 1.0, 0.5).unwrap();
        let s = signal(g, 0.0);
        for kind in [MisfitKind::L2, MisfitKind::T11, MisfitKind::T12, MisfitKind::T22, MisfitKind::Kr] {
            let v = evaluate(&Misfit::new(kind, 1.0), &s, &s).unwrap();
            assert_eq!(v.cost, 0.0, "{kind:?}");
            assert!(v.grad_x.iter().chain(&v.grad_z).all(|&x| x == 0.0), "{kind:?}");
        }
    }

    #[test]
    fn l2_gradient_is_the_weighted_residual() {
        let g = Grid2::new(3, 4, 1.0, 2.0).unwrap();
        let (a, b) = (signal(g, 0.0), signal(g, 1.0));
        let v = evaluate(&Misfit::new(MisfitKind::L2, 1.0), &a, &b).unwrap();
        assert!((v.grad_x[5] - 2.0 * (a.vx()[5] - b.vx()[5])).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = signal(Grid2::new(3, 4, 1.0, 1.0).unwrap(), 0.0);
        let b = signal(Grid2::new(4, 3, 1.0, 1.0).unwrap(), 0.0);
        assert!(evaluate(&Misfit::new(MisfitKind::L2, 1.0), &a, &b).is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!("T12".parse::<MisfitKind>().unwrap(), MisfitKind::T12);
        assert!("t21".parse::<MisfitKind>().is_err());
    }
}
