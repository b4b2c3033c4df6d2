//! Simultaneous-direction method of multipliers for the discrete dual
//! transport problems.
//!
//! Blocks (all with `y^0 = z^0 = 0`):
//!
//! | case              | `L_1` | `L_2` | `L_3`   | solve operator            |
//! |-------------------|-------|-------|---------|---------------------------|
//! | `q = 1`           | `Id`  | `∇`   | `Id/λ`  | `-Δ_X + (1 + 1/λ²) Id`    |
//! | `q = 2`           | `Id`  | `∇`   |         | `-Δ_X + Id`               |
//! | balanced          | `Id`  | `∇`   |         | `-Δ_X + Id`               |

use serde::{Deserialize, Serialize};

use crate::calculus::{div_into, grad_into};
use crate::elliptic;
use crate::error::{Error, Result};
use crate::field::{FieldV, FieldVd};
use crate::poisson::PoissonPlan;
use crate::vector::{self, VdNorm};

/// Relative tolerance on equal masses for balanced transport.
pub const BALANCE_TOL: f64 = 1e-8;
/// Below this `|f_1(y_1)|` the duality gap is reported in absolute terms.
pub const GAP_FLOOR: f64 = 1e-14;
/// Constant of [`auto_tau`], calibrated on two-delta instances.
pub const AUTO_TAU_SCALE: f64 = 12.0;
/// Smallest accepted `λ` for `q = 1`; `1/λ²` overflows below it.
pub const LAMBDA_MIN_Q1: f64 = 1e-150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Power {
    One,
    Two,
}

impl Power {
    pub fn value(self) -> f64 {
        match self {
            Power::One => 1.0,
            Power::Two => 2.0,
        }
    }
}

impl TryFrom<u8> for Power {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Power::One),
            2 => Ok(Power::Two),
            _ => Err(Error::InvalidParameter(format!("exponent must be 1 or 2, got {v}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportProblem {
    mu: FieldV,
    nu: FieldV,
    lambda: f64,
    p: Power,
    q: Power,
    vd_norm: VdNorm,
    balanced: bool,
}

impl TransportProblem {
    pub fn new(mu: FieldV, nu: FieldV, lambda: f64, p: Power, q: Power) -> Result<Self> {
        mu.check_compatible(&nu)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
        }
        match (p, q) {
            (Power::One, Power::One) if lambda < LAMBDA_MIN_Q1 => {
                return Err(Error::InvalidParameter(format!(
                    "lambda = {lambda:e} is below {LAMBDA_MIN_Q1:e}"
                )))
            }
            (Power::Two, Power::One) => {
                return Err(Error::InvalidParameter("(p, q) = (2, 1) is not supported".into()))
            }
            _ => {}
        }
        Ok(Self {
            mu,
            nu,
            lambda,
            p,
            q,
            vd_norm: VdNorm::Frobenius,
            balanced: false,
        })
    }

    /// Balanced `p = 1` transport. Masses must agree componentwise to
    /// [`BALANCE_TOL`]; the residual discrepancy is removed from `nu`.
    pub fn balanced(mu: FieldV, mut nu: FieldV) -> Result<Self> {
        mu.check_compatible(&nu)?;
        let grid = *mu.grid();
        let (m_mu, m_nu) = (mu.total_mass(), nu.total_mass());
        let l1 = |f: &FieldV, k: usize| f.component(k).iter().map(|x| x.abs()).sum::<f64>() * grid.cell_area();
        let area = grid.cell_area() * grid.n_sites() as f64;
        for k in 0..mu.n() {
            let scale = l1(&mu, k).max(l1(&nu, k));
            let gap = m_nu[k] - m_mu[k];
            if scale > 0.0 && gap.abs() > BALANCE_TOL * scale {
                return Err(Error::UnequalMass {
                    component: k,
                    relative: gap.abs() / scale,
                });
            }
            let shift = gap / area;
            for site in nu.as_mut_slice().chunks_exact_mut(mu.n()) {
                site[k] -= shift;
            }
        }
        Ok(Self {
            mu,
            nu,
            lambda: 1.0,
            p: Power::One,
            q: Power::One,
            vd_norm: VdNorm::Frobenius,
            balanced: true,
        })
    }

    pub fn with_vd_norm(mut self, vd_norm: VdNorm) -> Self {
        self.vd_norm = vd_norm;
        self
    }

    pub fn mu(&self) -> &FieldV {
        &self.mu
    }

    pub fn nu(&self) -> &FieldV {
        &self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> Power {
        self.p
    }

    pub fn q(&self) -> Power {
        self.q
    }

    pub fn vd_norm(&self) -> VdNorm {
        self.vd_norm
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    /// The same problem with `mu` and `nu` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            mu: self.nu.clone(),
            nu: self.mu.clone(),
            ..self.clone()
        }
    }

    /// `nu - mu`.
    pub fn imbalance(&self) -> FieldV {
        self.nu.sub(&self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tau: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub check_every: usize,
    /// Replace `tau` by [`auto_tau`] of the problem being solved.
    #[serde(default)]
    pub auto_tau: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 0.9,
            eps: 1e-4,
            max_iter: 20_000,
            check_every: 10,
            auto_tau: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau = {} must be positive", self.tau)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {} must be positive", self.eps)));
        }
        if self.max_iter == 0 || self.check_every == 0 {
            return Err(Error::InvalidParameter("max_iter and check_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub phi: FieldV,
    pub sigma: FieldVd,
    pub delta: FieldV,
    pub cost: f64,
    pub gap_history: Vec<(usize, f64)>,
    pub residual_history: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
    /// Duality gap and constraint residual of the returned iterate.
    pub gap: f64,
    pub residual: f64,
    /// The gap was measured in absolute terms because `|f_1(y_1)|` vanished.
    pub gap_absolute: bool,
    /// `|div σ - (μ - ν + δ)|_{X,2}`; zero up to rounding except in balanced mode.
    pub constraint_violation: f64,
}

/// `u + τ (ν - μ)`, with `diff = ν - μ`.
pub fn prox_linear(u: &FieldV, tau: f64, diff: &FieldV) -> FieldV {
    let mut out = u.clone();
    out.axpy(tau, diff);
    out
}

/// `(u + τ (ν - μ)) / (1 + τ/λ)`, with `diff = ν - μ`.
pub fn prox_quadratic(u: &FieldV, tau: f64, lambda: f64, diff: &FieldV) -> FieldV {
    let mut out = prox_linear(u, tau, diff);
    out.scale(1.0 / (1.0 + tau / lambda));
    out
}

/// Sitewise projection onto `{|u_s|_V <= radius}`.
pub fn project_ball_v(u: &FieldV, radius: f64) -> FieldV {
    let mut out = u.clone();
    let n = out.n();
    for site in out.as_mut_slice().chunks_exact_mut(n) {
        vector::project_euclidean(site, radius);
    }
    out
}

/// Sitewise projection onto `{|w_s| <= radius}` for the chosen `V^d` norm.
pub fn project_ball_vd(w: &FieldVd, radius: f64, which: VdNorm) -> FieldVd {
    let mut out = w.clone();
    let m = out.site_len();
    project_vd_slice(out.as_mut_slice(), m, radius, which);
    out
}

fn project_vd_slice(data: &mut [f64], site_len: usize, radius: f64, which: VdNorm) {
    match which {
        VdNorm::Frobenius => data
            .chunks_exact_mut(site_len)
            .for_each(|s| vector::project_euclidean(s, radius)),
        VdNorm::Operator => data
            .chunks_exact_mut(site_len)
            .for_each(|s| vector::project_operator(s, radius)),
    }
}

/// `σ = z_2 / τ` and `δ = div(z_2) / τ + ν - μ`.
pub fn recover_primal(z2: &FieldVd, tau: f64, diff: &FieldV) -> (FieldVd, FieldV) {
    let mut sigma = z2.clone();
    sigma.scale(1.0 / tau);
    let mut delta = FieldV::zeros(*z2.grid(), z2.n());
    div_into(&sigma, &mut delta);
    delta.axpy(1.0, diff);
    (sigma, delta)
}

/// `λ` after rescaling the domain by `length` and the measures by `mass`.
///
/// For `q = 1` the cost is `min(λ, dist)` per unit mass, so `λ` is a length.
/// For `q = 2` the imbalance term is `λ |δ|² / 2` against a transport term
/// linear in mass and length, so `λ` scales like length over mass.
pub fn scale_lambda(lambda: f64, length: f64, mass: f64, q: Power) -> Result<f64> {
    if !(length > 0.0 && mass > 0.0 && length.is_finite() && mass.is_finite()) {
        return Err(Error::InvalidParameter("scale factors must be positive".into()));
    }
    Ok(match q {
        Power::One => lambda * length,
        Power::Two => lambda * length / mass,
    })
}

/// Step size `c * sqrt(area) / |ν - μ|_{X,2}` with `c` = [`AUTO_TAU_SCALE`].
///
/// The iteration depends on the measures only through `τ (ν - μ)`, so this
/// makes it invariant under scaling of the measures. The L² norm tracks how
/// concentrated the imbalance is, which fixed `τ` does not.
pub fn auto_tau(problem: &TransportProblem) -> f64 {
    let g = problem.mu.grid();
    let area = g.n_sites() as f64 * g.cell_area();
    let size = problem.nu.sub(&problem.mu).norm_l2();
    if size > 0.0 {
        AUTO_TAU_SCALE * area.sqrt() / size
    } else {
        SolverConfig::default().tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCheck {
    pub gap: f64,
    pub residual: f64,
    pub gap_absolute: bool,
    pub stop: bool,
}

/// Running SDMM state. [`solve`] drives it; it is public so that single
/// iterations can be inspected.
#[derive(Debug, Clone)]
pub struct Sdmm {
    lambda: f64,
    q: Power,
    vd_norm: VdNorm,
    balanced: bool,
    tau: f64,
    diff: FieldV,
    plan: PoissonPlan,
    phi: FieldV,
    grad_phi: FieldVd,
    y1: FieldV,
    z1: FieldV,
    y2: FieldVd,
    z2: FieldVd,
    // Only for q = 1 unbalanced.
    y3: Option<FieldV>,
    z3: Option<FieldV>,
    work_vd: FieldVd,
    work_v: FieldV,
    iteration: usize,
}

impl Sdmm {
    pub fn new(problem: &TransportProblem, tau: f64) -> Result<Self> {
        if problem.p == Power::Two {
            return Err(Error::InvalidParameter("p = 2 is solved by the elliptic path".into()));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
        }
        let grid = *problem.mu.grid();
        let n = problem.mu.n();
        let with_bound = !problem.balanced && problem.q == Power::One;
        let shift = if with_bound {
            1.0 + 1.0 / (problem.lambda * problem.lambda)
        } else {
            1.0
        };
        if !shift.is_finite() {
            return Err(Error::InvalidParameter("1/lambda^2 overflows".into()));
        }
        let zeros = FieldV::zeros(grid, n);
        let zeros_vd = FieldVd::zeros(grid, n);
        Ok(Self {
            lambda: problem.lambda,
            q: problem.q,
            vd_norm: problem.vd_norm,
            balanced: problem.balanced,
            tau,
            diff: problem.imbalance(),
            plan: PoissonPlan::new(grid, shift)?,
            phi: zeros.clone(),
            grad_phi: zeros_vd.clone(),
            y1: zeros.clone(),
            z1: zeros.clone(),
            y2: zeros_vd.clone(),
            z2: zeros_vd.clone(),
            y3: with_bound.then(|| zeros.clone()),
            z3: with_bound.then(|| zeros.clone()),
            work_vd: zeros_vd,
            work_v: zeros,
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn phi(&self) -> &FieldV {
        &self.phi
    }

    pub fn multipliers(&self) -> (&FieldV, &FieldVd, Option<&FieldV>) {
        (&self.z1, &self.z2, self.z3.as_ref())
    }

    pub fn step(&mut self) -> Result<()> {
        let n = self.phi.n();
        let inv_lambda = 1.0 / self.lambda;

        // rhs = (y1 - z1) - div(y2 - z2) + (y3 - z3) / λ
        for ((w, y), z) in self
            .work_vd
            .as_mut_slice()
            .iter_mut()
            .zip(self.y2.as_slice())
            .zip(self.z2.as_slice())
        {
            *w = y - z;
        }
        div_into(&self.work_vd, &mut self.work_v);
        {
            let rhs = self.phi.as_mut_slice();
            let (y1, z1, dv) = (self.y1.as_slice(), self.z1.as_slice(), self.work_v.as_slice());
            for i in 0..rhs.len() {
                rhs[i] = y1[i] - z1[i] - dv[i];
            }
            if let (Some(y3), Some(z3)) = (&self.y3, &self.z3) {
                for (r, (y, z)) in rhs.iter_mut().zip(y3.as_slice().iter().zip(z3.as_slice())) {
                    *r += (y - z) * inv_lambda;
                }
            }
        }
        self.solve_phi(n)?;
        grad_into(&self.phi, &mut self.grad_phi);

        // Block 1: data term.
        let shrink = match self.q {
            Power::Two if !self.balanced => 1.0 / (1.0 + self.tau * inv_lambda),
            _ => 1.0,
        };
        {
            let (phi, diff) = (self.phi.as_slice(), self.diff.as_slice());
            let (y1, z1) = (self.y1.as_mut_slice(), self.z1.as_mut_slice());
            for i in 0..phi.len() {
                let t = phi[i] + z1[i];
                let y = (t + self.tau * diff[i]) * shrink;
                y1[i] = y;
                z1[i] = t - y;
            }
        }

        // Block 2: unit ball for the gradient.
        {
            let m = self.y2.site_len();
            let (g, z2) = (self.grad_phi.as_slice(), self.z2.as_slice());
            let y2 = self.y2.as_mut_slice();
            for i in 0..y2.len() {
                y2[i] = g[i] + z2[i];
            }
            project_vd_slice(y2, m, 1.0, self.vd_norm);
            let (y2, z2) = (self.y2.as_slice(), self.z2.as_mut_slice());
            for i in 0..y2.len() {
                z2[i] = g[i] + z2[i] - y2[i];
            }
        }

        // Block 3: |φ/λ| <= 1.
        if let (Some(y3), Some(z3)) = (&mut self.y3, &mut self.z3) {
            let phi = self.phi.as_slice();
            let (y3, z3) = (y3.as_mut_slice(), z3.as_mut_slice());
            for ((ys, zs), ps) in y3.chunks_exact_mut(n).zip(z3.chunks_exact_mut(n)).zip(phi.chunks_exact(n)) {
                for k in 0..n {
                    ys[k] = ps[k] * inv_lambda + zs[k];
                }
                vector::project_euclidean(ys, 1.0);
                for k in 0..n {
                    zs[k] += ps[k] * inv_lambda - ys[k];
                }
            }
        }

        self.iteration += 1;
        Ok(())
    }

    fn solve_phi(&mut self, n: usize) -> Result<()> {
        if n == 1 {
            self.plan.solve_scalar_in_place(self.phi.as_mut_slice());
        } else {
            self.phi = self.plan.solve(&self.phi)?;
        }
        if self.phi.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.iteration + 1,
                what: "non-finite potential".into(),
            });
        }
        Ok(())
    }

    /// `f_1(y_1)`.
    pub fn data_term(&self) -> f64 {
        let mut f = -self.y1.dot(&self.diff);
        if self.q == Power::Two && !self.balanced {
            f += self.y1.norm_l2_squared() / (2.0 * self.lambda);
        }
        f
    }

    /// Dual objective at the current potential.
    pub fn cost(&self) -> f64 {
        let mut c = self.phi.dot(&self.diff);
        if self.q == Power::Two && !self.balanced {
            c -= self.phi.norm_l2_squared() / (2.0 * self.lambda);
        }
        c
    }

    pub fn recover_primal(&self) -> (FieldVd, FieldV) {
        let (sigma, delta) = recover_primal(&self.z2, self.tau, &self.diff);
        if self.balanced {
            (sigma, FieldV::zeros(*delta.grid(), delta.n()))
        } else {
            (sigma, delta)
        }
    }

    /// Primal objective of the recovered pair.
    pub fn primal_value(&self, sigma: &FieldVd, delta: &FieldV) -> f64 {
        let mut v = sigma.norm_l1(self.vd_norm);
        if !self.balanced {
            v += match self.q {
                Power::One => self.lambda * delta.norm_l1(),
                Power::Two => 0.5 * self.lambda * delta.norm_l2_squared(),
            };
        }
        v
    }

    /// Duality gap and constraint residual after the latest [`Sdmm::step`].
    pub fn check(&self, eps: f64) -> Result<StopCheck> {
        let (sigma, delta) = self.recover_primal();
        let f1 = self.data_term();
        let raw = (self.primal_value(&sigma, &delta) + f1).abs();
        let gap_absolute = f1.abs() < GAP_FLOOR;
        let gap = if gap_absolute { raw } else { raw / f1.abs() };

        let w = self.phi.grid().cell_area();
        let diff_norm = |a: &[f64], b: &[f64], scale: f64| {
            (w * a.iter().zip(b).map(|(x, y)| (x * scale - y).powi(2)).sum::<f64>()).sqrt()
        };
        let norm = |a: &[f64], scale: f64| (w * a.iter().map(|x| (x * scale).powi(2)).sum::<f64>()).sqrt();
        let mut num = diff_norm(self.phi.as_slice(), self.y1.as_slice(), 1.0)
            + diff_norm(self.grad_phi.as_slice(), self.y2.as_slice(), 1.0);
        let mut lphi = norm(self.phi.as_slice(), 1.0) + norm(self.grad_phi.as_slice(), 1.0);
        let mut ys = norm(self.y1.as_slice(), 1.0) + norm(self.y2.as_slice(), 1.0);
        if let Some(y3) = &self.y3 {
            let s = 1.0 / self.lambda;
            num += diff_norm(self.phi.as_slice(), y3.as_slice(), s);
            lphi += norm(self.phi.as_slice(), s);
            ys += norm(y3.as_slice(), 1.0);
        }
        let den = lphi.max(ys);
        let residual = if den > 0.0 { num / den } else { 0.0 };

        if !(gap.is_finite() && residual.is_finite()) {
            return Err(Error::Diverged {
                iteration: self.iteration,
                what: format!("gap {gap}, residual {residual}"),
            });
        }
        Ok(StopCheck {
            gap,
            residual,
            gap_absolute,
            stop: gap.max(residual) <= eps,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            phi: self.phi.clone(),
            z2: self.z2.clone(),
            tau: self.tau,
        }
    }
}

#[derive(Debug, Clone)]
struct Snapshot {
    phi: FieldV,
    z2: FieldVd,
    tau: f64,
}


/// Solves the transport problem. `(p, q) = (2, 2)` is dispatched to
/// [`elliptic::solve_h1`].
pub fn solve(problem: &TransportProblem, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    if problem.p == Power::Two {
        return elliptic::solve_h1(problem);
    }
    let tau = if config.auto_tau { auto_tau(problem) } else { config.tau };
    let mut state = Sdmm::new(problem, tau)?;
    let mut gap_history = Vec::new();
    let mut residual_history = Vec::new();
    let mut best: Option<(f64, StopCheck, Snapshot)> = None;
    let mut converged = false;

    for it in 1..=config.max_iter {
        state.step()?;
        if it != 1 && it % config.check_every != 0 && it != config.max_iter {
            continue;
        }
        let check = state.check(config.eps)?;
        gap_history.push((it, check.gap));
        residual_history.push((it, check.residual));
        let score = check.gap.max(check.residual);
        if check.stop {
            best = Some((score, check, state.snapshot()));
            converged = true;
            break;
        }
        if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
            best = Some((score, check, state.snapshot()));
        }
    }

    let (_, check, snap) = best.expect("at least one stopping check runs");
    let (sigma, delta) = recover_primal(&snap.z2, snap.tau, &state.diff);
    let delta = if problem.balanced {
        FieldV::zeros(*delta.grid(), delta.n())
    } else {
        delta
    };
    let mut div_sigma = FieldV::zeros(*sigma.grid(), sigma.n());
    div_into(&sigma, &mut div_sigma);
    let mut violation = div_sigma;
    violation.axpy(1.0, &state.diff);
    violation.axpy(-1.0, &delta);
    let mut cost = snap.phi.dot(&state.diff);
    if problem.q == Power::Two && !problem.balanced {
        cost -= snap.phi.norm_l2_squared() / (2.0 * problem.lambda);
    }
    Ok(SolverResult {
        phi: snap.phi,
        sigma,
        delta,
        cost,
        gap_history,
        residual_history,
        iterations: state.iteration,
        converged,
        gap: check.gap,
        residual: check.residual,
        gap_absolute: check.gap_absolute,
        constraint_violation: violation.norm_l2(),
    })
}
