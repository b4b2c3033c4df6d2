//! Misfit between a two-component pulse and its time-shifted copy, as a
//! function of the shift.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uvot_core::lift::lift_lorentz;
use uvot_core::{solve, FieldV, Grid2, LiftKind, Power, SignedSignal2, SolverConfig, TransportProblem};

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftMisfit {
    /// `Σ_k |a_k - b_k|_{L²}` over the two components.
    L2,
    /// Scalar `T_{1,1}` of each component, summed.
    KrScalar { lambda: f64 },
    /// Transport between the lifted signals.
    Transport { p: Power, q: Power, lambda: f64 },
}

impl ShiftMisfit {
    /// Parses `l2`, `kr` or `tPQ` (for example `t12`).
    pub fn parse(name: &str, lambda: f64) -> Result<Self> {
        let power = |c: u8| match c {
            b'1' => Ok(Power::One),
            b'2' => Ok(Power::Two),
            _ => Err(ExperimentError::InvalidSpec(format!("unknown misfit `{name}`"))),
        };
        match name.to_ascii_lowercase().as_str() {
            "l2" => Ok(ShiftMisfit::L2),
            "kr" => Ok(ShiftMisfit::KrScalar { lambda }),
            s if s.len() == 3 && s.starts_with('t') => Ok(ShiftMisfit::Transport {
                p: power(s.as_bytes()[1])?,
                q: power(s.as_bytes()[2])?,
                lambda,
            }),
            _ => Err(ExperimentError::InvalidSpec(format!("unknown misfit `{name}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ShiftMisfit::L2 => "l2".into(),
            ShiftMisfit::KrScalar { lambda } => format!("kr_lambda{lambda}"),
            ShiftMisfit::Transport { p, q, lambda } => format!("t{}{}_lambda{lambda}", p.value(), q.value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftScanSpec {
    /// Width of the Gaussian `f(t) = exp(-t²/α²) / (√(2π) α)`.
    pub alpha: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub t0_min: f64,
    pub t0_max: f64,
    pub t0_count: usize,
    pub lift: LiftKind,
    pub solver: SolverConfig,
}

impl Default for ShiftScanSpec {
    fn default() -> Self {
        Self {
            alpha: 4.0 / 3.0,
            t_min: -10.0,
            t_max: 10.0,
            samples: 2048,
            t0_min: -6.0,
            t0_max: 6.0,
            t0_count: 49,
            lift: LiftKind::Pauli,
            solver: SolverConfig {
                eps: 1e-4,
                max_iter: 20_000,
                auto_tau: true,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t0: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `(f'(t), f''(t))` for the Gaussian of width `alpha`.
pub fn pulse(alpha: f64, t: f64) -> (f64, f64) {
    let a2 = alpha * alpha;
    let f = (-t * t / a2).exp() / ((2.0 * std::f64::consts::PI).sqrt() * alpha);
    (-2.0 * t / a2 * f, (4.0 * t * t / (a2 * a2) - 2.0 / a2) * f)
}

impl ShiftScanSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.t_max > self.t_min && self.samples >= 2 && self.t0_count >= 1) {
            return Err(ExperimentError::InvalidSpec("empty sampling or nonpositive width".into()));
        }
        if self.t0_max < self.t0_min {
            return Err(ExperimentError::InvalidSpec("t0_max < t0_min".into()));
        }
        // The shifted pulse must decay inside the window for every shift.
        let reach = 3.0 * self.alpha;
        let (lo, hi) = (self.t0_min.min(0.0), self.t0_max.max(0.0));
        if self.t_min > lo - reach || self.t_max < hi + reach {
            return Err(ExperimentError::InvalidSpec(format!(
                "time window [{}, {}] does not cover shifts [{lo}, {hi}] plus the pulse support",
                self.t_min, self.t_max
            )));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2> {
        Ok(Grid2::line(self.t_min, self.t_max, self.samples)?)
    }

    pub fn shifts(&self) -> Vec<f64> {
        if self.t0_count == 1 {
            return vec![self.t0_min];
        }
        let step = (self.t0_max - self.t0_min) / (self.t0_count - 1) as f64;
        (0..self.t0_count).map(|k| self.t0_min + step * k as f64).collect()
    }

    /// `v(t - t0)` sampled on [`Self::grid`].
    pub fn signal(&self, t0: f64) -> Result<SignedSignal2> {
        let g = self.grid()?;
        let (vx, vz) = (0..g.n_sites()).map(|s| pulse(self.alpha, g.coords(s, 0).0 - t0)).unzip();
        Ok(SignedSignal2::new(g, vx, vz)?)
    }
}

/// Misfit between two signals on the same line grid.
pub fn misfit(kind: &ShiftMisfit, a: &SignedSignal2, b: &SignedSignal2, lift: LiftKind, solver: &SolverConfig) -> Result<(f64, usize, bool)> {
    let g = *a.grid();
    if !g.same_shape(b.grid()) {
        return Err(ExperimentError::ShapeMismatch("signals on different grids".into()));
    }
    match *kind {
        ShiftMisfit::L2 => {
            let w = g.cell_area();
            let norm = |x: &[f64], y: &[f64]| (w * x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>()).sqrt();
            Ok((norm(a.vx(), b.vx()) + norm(a.vz(), b.vz()), 0, true))
        }
        ShiftMisfit::KrScalar { lambda } => {
            let mut total = (0.0, 0, true);
            for (x, y) in [(a.vx(), b.vx()), (a.vz(), b.vz())] {
                let mu = FieldV::from_vec(g, 1, x.to_vec())?;
                let nu = FieldV::from_vec(g, 1, y.to_vec())?;
                let r = solve(&TransportProblem::new(mu, nu, lambda, Power::One, Power::One)?, solver)?;
                total = (total.0 + r.cost, total.1 + r.iterations, total.2 && r.converged);
            }
            Ok(total)
        }
        ShiftMisfit::Transport { p, q, lambda } => {
            let problem = TransportProblem::new(lift_lorentz(a, lift), lift_lorentz(b, lift), lambda, p, q)?;
            let r = solve(&problem, solver)?;
            Ok((r.cost, r.iterations, r.converged))
        }
    }
}

/// Misfit between `v` and `v(· - t0)` for every sampled shift.
pub fn shift_scan(spec: &ShiftScanSpec, kind: &ShiftMisfit) -> Result<Vec<ScanPoint>> {
    spec.validate()?;
    let reference = spec.signal(0.0)?;
    spec.shifts()
        .into_par_iter()
        .map(|t0| {
            let (value, iterations, converged) = if t0 == 0.0 {
                (0.0, 0, true)
            } else {
                misfit(kind, &reference, &spec.signal(t0)?, spec.lift, &spec.solver)?
            };
            Ok(ScanPoint {
                t0,
                value,
                iterations,
                converged,
            })
        })
        .collect()
}

/// One period of `sin` on `[0, 2π]`, zero elsewhere, delayed by `t`.
pub fn sine_period(x: f64, t: f64) -> f64 {
    (x - t).clamp(0.0, 2.0 * std::f64::consts::PI).sin()
}

/// Scalar `T_{1,1}` between one sine period and its copy delayed by each
/// entry of `shifts`, on a common line with spacing close to `h`.
pub fn sine_pair_scan(shifts: &[f64], lambda: f64, h: f64, solver: &SolverConfig) -> Result<Vec<ScanPoint>> {
    let reach = shifts.iter().copied().fold(0.0, f64::max);
    if shifts.iter().any(|&t| t < 0.0) || !(h > 0.0) {
        return Err(ExperimentError::InvalidSpec("shifts must be nonnegative and h positive".into()));
    }
    let (a, b) = (-1.0, 2.0 * std::f64::consts::PI + reach + 1.0);
    let g = Grid2::line(a, b, ((b - a) / h).round() as usize + 1)?;
    let sample = |t: f64| (0..g.n_sites()).map(|s| sine_period(g.coords(s, 0).0, t)).collect::<Vec<_>>();
    let mu = FieldV::from_vec(g, 1, sample(0.0))?;
    shifts
        .par_iter()
        .map(|&t| {
            let nu = FieldV::from_vec(g, 1, sample(t))?;
            let r = solve(&TransportProblem::new(mu.clone(), nu, lambda, Power::One, Power::One)?, solver)?;
            Ok(ScanPoint {
                t0: t,
                value: r.cost,
                iterations: r.iterations,
                converged: r.converged,
            })
        })
        .collect()
}
