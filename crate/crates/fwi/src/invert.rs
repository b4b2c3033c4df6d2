//! Multi-source misfit, its adjoint-state gradient, and a gradient-descent
//! inversion loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uvot_core::SignedSignal2;

use crate::error::{FwiError, Result};
use crate::misfit::{evaluate, Misfit};
use crate::model::{smooth, AcousticModel, Source};
use crate::propagate::{adjoint, forward};

/// Something to minimize over the velocity model.
pub trait Objective: Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// `Σ_s g(d_s[c], d_s^obs)` over the sources of a survey.
#[derive(Debug, Clone)]
pub struct FwiProblem {
    /// Medium and receivers; its source is replaced by each entry of
    /// `sources`.
    pub model: AcousticModel,
    pub sources: Vec<Source>,
    pub observed: Vec<SignedSignal2>,
    pub misfit: Misfit,
    /// Sites whose velocity may change; `None` frees every site.
    pub mask: Option<Vec<bool>>,
    /// Gaussian smoothing of the gradient, in cells; 0 keeps the exact
    /// gradient. Smoothing is symmetric positive definite, so the result is
    /// still a descent direction.
    pub smoothing: f64,
}

impl FwiProblem {
    /// Observed data generated on `truth`.
    pub fn synthetic(
        model: AcousticModel,
        sources: Vec<Source>,
        truth: &[f64],
        misfit: Misfit,
    ) -> Result<Self> {
        let target = model.with_velocity(truth.to_vec());
        let observed = sources
            .par_iter()
            .map(|&s| Ok(forward(&target.with_source(s), false)?.traces))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            sources,
            observed,
            misfit,
            mask: None,
            smoothing: 0.0,
        })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn with_smoothing(mut self, sigma: f64) -> Self {
        self.smoothing = sigma;
        self
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if self.sources.len() != self.observed.len() {
            return Err(FwiError::ShapeMismatch(format!(
                "{} sources but {} observed records",
                self.sources.len(),
                self.observed.len()
            )));
        }
        if x.len() != self.model.grid.n_sites() {
            return Err(FwiError::ShapeMismatch(format!(
                "velocity has {} values for {} sites",
                x.len(),
                self.model.grid.n_sites()
            )));
        }
        Ok(())
    }

    fn shot(&self, x: &[f64], k: usize, with_gradient: bool) -> Result<(f64, Option<Vec<f64>>)> {
        let model = self.model.with_velocity(x.to_vec()).with_source(self.sources[k]);
        let record = forward(&model, with_gradient)?;
        let m = evaluate(&self.misfit, &record.traces, &self.observed[k])?;
        if !with_gradient {
            return Ok((m.cost, None));
        }
        let g = adjoint(&model, &record, &m.grad_x, &m.grad_z)?;
        Ok((m.cost, Some(g.velocity)))
    }
}

impl Objective for FwiProblem {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let costs = (0..self.sources.len())
            .into_par_iter()
            .map(|k| self.shot(x, k, false).map(|(c, _)| c))
            .collect::<Result<Vec<_>>>()?;
        Ok(costs.iter().sum())
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(x)?;
        let shots = (0..self.sources.len())
            .into_par_iter()
            .map(|k| self.shot(x, k, true))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (c, g) in shots {
            total += c;
            for (a, b) in grad.iter_mut().zip(g.expect("gradient requested")) {
                *a += b;
            }
        }
        let mask_out = |grad: &mut Vec<f64>| {
            if let Some(mask) = &self.mask {
                for (g, &free) in grad.iter_mut().zip(mask) {
                    if !free {
                        *g = 0.0;
                    }
                }
            }
        };
        mask_out(&mut grad);
        if self.smoothing > 0.0 {
            grad = smooth(&self.model.grid, &grad, self.smoothing);
            mask_out(&mut grad);
        }
        Ok((total, grad))
    }
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted { x: Vec<f64>, value: f64, trials: usize },
    /// No trial point decreased the objective enough.
    Failed { trials: usize },
}

pub trait Optimizer {
    fn step(&mut self, objective: &dyn Objective, x: &[f64], value: f64, grad: &[f64]) -> Result<StepOutcome>;
}

/// Projected steepest descent with Armijo backtracking. The step is
/// expressed as the largest velocity change it causes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientDescent {
    /// Largest velocity change of the next trial step (m/s).
    pub step: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Factor applied to the step after an accepted first trial.
    pub grow: f64,
    pub max_trials: usize,
    pub bounds: (f64, f64),
}

impl GradientDescent {
    pub fn new(step: f64, bounds: (f64, f64)) -> Self {
        Self {
            step,
            armijo: 1e-4,
            shrink: 0.5,
            grow: 1.5,
            max_trials: 10,
            bounds,
        }
    }
}

impl Optimizer for GradientDescent {
    fn step(&mut self, objective: &dyn Objective, x: &[f64], value: f64, grad: &[f64]) -> Result<StepOutcome> {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax == 0.0 {
            return Ok(StepOutcome::Failed { trials: 0 });
        }
        let (lo, hi) = self.bounds;
        for trial in 1..=self.max_trials {
            let t = self.step / gmax;
            let y: Vec<f64> = x.iter().zip(grad).map(|(a, g)| (a - t * g).clamp(lo, hi)).collect();
            let decrease: f64 = grad.iter().zip(x.iter().zip(&y)).map(|(g, (a, b))| g * (b - a)).sum();
            let trial_value = objective.value(&y)?;
            if trial_value <= value + self.armijo * decrease && trial_value < value {
                if trial == 1 {
                    self.step *= self.grow;
                }
                return Ok(StepOutcome::Accepted {
                    x: y,
                    value: trial_value,
                    trials: trial,
                });
            }
            self.step *= self.shrink;
        }
        Ok(StepOutcome::Failed {
            trials: self.max_trials,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionHistory {
    /// Velocity before the first and after every accepted iteration.
    pub velocities: Vec<Vec<f64>>,
    pub misfits: Vec<f64>,
    pub evaluations: usize,
    /// Set when the line search failed; the last iterate is the best one.
    pub line_search_failed: bool,
}

impl InversionHistory {
    pub fn best(&self) -> &[f64] {
        self.velocities.last().expect("history starts with the initial model")
    }
}

/// Runs up to `iterations` descent steps, stopping early once the misfit
/// drops to `tolerance`.
pub fn invert(
    objective: &dyn Objective,
    initial: &[f64],
    iterations: usize,
    tolerance: f64,
    optimizer: &mut dyn Optimizer,
) -> Result<InversionHistory> {
    let mut x = initial.to_vec();
    let (mut value, mut grad) = objective.value_and_gradient(&x)?;
    let mut history = InversionHistory {
        velocities: vec![x.clone()],
        misfits: vec![value],
        evaluations: 1,
        line_search_failed: false,
    };
    for _ in 0..iterations {
        if value <= tolerance {
            break;
        }
        match optimizer.step(objective, &x, value, &grad)? {
            StepOutcome::Accepted { x: y, trials, .. } => {
                history.evaluations += trials + 1;
                x = y;
                (value, grad) = objective.value_and_gradient(&x)?;
                history.velocities.push(x.clone());
                history.misfits.push(value);
            }
            StepOutcome::Failed { trials } => {
                history.evaluations += trials;
                history.line_search_failed = true;
                break;
            }
        }
    }
    Ok(history)
}
