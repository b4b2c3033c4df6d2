//! Direct solver for `p = q = 2`, where the dual problem reduces to the
//! elliptic equation `(-Δ_X + 1/λ) φ = ν - μ`, one scalar solve per component.

use crate::calculus::grad;
use crate::error::{Error, Result};
use crate::field::FieldV;
use crate::poisson::PoissonPlan;
use crate::sdmm::{Power, SolverResult, TransportProblem};

pub fn solve_h1(problem: &TransportProblem) -> Result<SolverResult> {
    let lambda = problem.lambda();
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    if problem.p() != Power::Two || problem.q() != Power::Two {
        return Err(Error::InvalidParameter("the elliptic path solves p = q = 2 only".into()));
    }
    let diff = problem.imbalance();
    let plan = PoissonPlan::new(*diff.grid(), 1.0 / lambda)?;
    let phi = plan.solve(&diff)?;

    let sigma = grad(&phi);
    let mut delta = phi.clone();
    delta.scale(1.0 / lambda);

    let cost = phi.dot(&diff) - phi.norm_l2_squared() / (2.0 * lambda) - 0.5 * sigma.norm_l2_squared();
    let primal = primal_value(sigma.norm_l2_squared(), &delta, lambda);
    let gap = if cost.abs() > 0.0 {
        (primal - cost).abs() / cost.abs()
    } else {
        (primal - cost).abs()
    };
    let residual = {
        let r = plan.apply(&phi).sub(&diff).norm_l2();
        let d = diff.norm_l2();
        if d > 0.0 {
            r / d
        } else {
            r
        }
    };

    let mut violation = crate::calculus::div(&sigma);
    violation.axpy(1.0, &diff);
    violation.axpy(-1.0, &delta);
    Ok(SolverResult {
        phi,
        sigma,
        delta,
        cost,
        gap_history: vec![(0, gap)],
        residual_history: vec![(0, residual)],
        iterations: 0,
        converged: true,
        gap,
        residual,
        gap_absolute: cost == 0.0,
        constraint_violation: violation.norm_l2(),
    })
}

/// `|σ|²/2 + λ |δ|²/2`.
fn primal_value(sigma_sq: f64, delta: &FieldV, lambda: f64) -> f64 {
    0.5 * sigma_sq + 0.5 * lambda * delta.norm_l2_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::sdmm::{solve, SolverConfig};

    fn field(g: Grid2, n: usize, seed: u64) -> FieldV {
        let mut state = seed;
        FieldV::from_fn(g, n, |_, _, out| {
            for v in out {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *v = (state >> 11) as f64 / (1u64 << 53) as f64;
            }
        })
        .unwrap()
    }

    #[test]
    fn identical_measures() {
        let g = Grid2::new(8, 8, 0.5, 0.5).unwrap();
        let mu = field(g, 2, 1);
        let p = TransportProblem::new(mu.clone(), mu, 1.0, Power::Two, Power::Two).unwrap();
        let r = solve_h1(&p).unwrap();
        assert!(r.phi.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn strong_duality_and_residual() {
        let g = Grid2::new(8, 8, 0.25, 0.5).unwrap();
        let p = TransportProblem::new(field(g, 3, 5), field(g, 3, 9), 0.7, Power::Two, Power::Two).unwrap();
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert!(r.residual < 1e-10);
        assert!(r.gap < 1e-9);
        assert!(r.constraint_violation < 1e-10);
    }

    #[test]
    fn components_decouple() {
        let g = Grid2::new(9, 7, 0.3, 0.3).unwrap();
        let (mu, nu) = (field(g, 3, 2), field(g, 3, 4));
        let joint = solve_h1(&TransportProblem::new(mu.clone(), nu.clone(), 2.0, Power::Two, Power::Two).unwrap())
            .unwrap();
        let mut total = 0.0;
        for k in 0..3 {
            let m = FieldV::from_components(g, &[&mu.component(k)]).unwrap();
            let n = FieldV::from_components(g, &[&nu.component(k)]).unwrap();
            let single = solve_h1(&TransportProblem::new(m, n, 2.0, Power::Two, Power::Two).unwrap()).unwrap();
            assert_eq!(single.phi.component(0), joint.phi.component(k));
            total += single.cost;
        }
        assert!((total - joint.cost).abs() < 1e-12 * joint.cost.abs());
    }
}
