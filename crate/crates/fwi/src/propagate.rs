//! Leapfrog time stepping of the first-order acoustic system and its exact
//! discrete adjoint.
//!
//! One step maps `(v_x, v_z, p)` at step `n` to step `n + 1`:
//!
//! ```text
//! v   <- D (v + dt/ρ C p)
//! p   <- D (p + dt ρ c² (C_x v_x + C_z v_z + s_n e_src / (h_x h_y)))
//! ```
//!
//! with `C` the centered difference with zero exterior values and `D` the
//! sponge. `C` is skew-symmetric, so its transpose is `-C`. Receivers sample
//! the velocity after each step.
//!
//! Centered differences on a collocated grid split the nodes into four
//! sublattices that do not exchange information: a point source drives `p`
//! on one of them and each velocity component on one other. Sources and
//! receivers therefore act through the 3×3 binomial stencil around their
//! node, which touches all four.

use uvot_core::{Grid2, SignedSignal2};

use crate::error::{FwiError, Result};
use crate::model::AcousticModel;

/// Grid on which receiver traces live: receivers along `x` with unit
/// spacing, time along `y` rescaled to the same extent `ℓ = N_r - 1`.
pub fn trace_grid(nr: usize, nt: usize) -> Result<Grid2> {
    let ell = nr.saturating_sub(1).max(1) as f64;
    let hy = if nt > 1 { ell / (nt - 1) as f64 } else { 1.0 };
    Ok(Grid2::new(nr, nt, 1.0, hy)?)
}

#[derive(Debug, Clone)]
pub struct Record {
    /// `v_x`, `v_z` at receiver `r`, step `n`, stored at site `n N_r + r`.
    pub traces: SignedSignal2,
    /// `Σ (ρ |v|² + p² / (ρ c²)) h_x h_y` after each step.
    pub energy: Vec<f64>,
    /// `C_x v_x + C_z v_z` plus the injected volume rate density after each
    /// step, `nt × n_sites`: the factor multiplying `dt ρ c²`.
    pub divergence: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Gradient {
    /// `dJ/dc` per site.
    pub velocity: Vec<f64>,
    /// `dJ/ds_n` for the source samples.
    pub source: Vec<f64>,
}

/// `out = C_x u` (`along_x`) or `C_z u`.
fn centered(grid: &Grid2, u: &[f64], out: &mut [f64], along_x: bool) {
    let (nx, ny) = (grid.nx(), grid.ny());
    if along_x {
        let w = 0.5 / grid.hx();
        for (row, o) in u.chunks_exact(nx).zip(out.chunks_exact_mut(nx)) {
            for i in 0..nx {
                let east = if i + 1 < nx { row[i + 1] } else { 0.0 };
                let west = if i > 0 { row[i - 1] } else { 0.0 };
                o[i] = w * (east - west);
            }
        }
    } else {
        let w = 0.5 / grid.hy();
        for j in 0..ny {
            for i in 0..nx {
                let north = if j + 1 < ny { u[(j + 1) * nx + i] } else { 0.0 };
                let south = if j > 0 { u[(j - 1) * nx + i] } else { 0.0 };
                out[j * nx + i] = w * (north - south);
            }
        }
    }
}

/// Sites and weights of the binomial stencil `(1, 2, 1) ⊗ (1, 2, 1) / 16`
/// at `node`, clipped to the grid and renormalized.
pub fn stencil(grid: &Grid2, (i, j): (usize, usize)) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(9);
    for dj in -1isize..=1 {
        for di in -1isize..=1 {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            if ii < 0 || jj < 0 || ii >= grid.nx() as isize || jj >= grid.ny() as isize {
                continue;
            }
            let w = (2 - di.abs()) * (2 - dj.abs());
            out.push((jj as usize * grid.nx() + ii as usize, w as f64));
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    out.iter_mut().for_each(|(_, w)| *w /= total);
    out
}

fn sample(stencils: &[Vec<(usize, f64)>], field: &[f64], step: usize, out: &mut [f64]) {
    let nr = stencils.len();
    for (r, st) in stencils.iter().enumerate() {
        out[step * nr + r] = st.iter().map(|&(s, w)| w * field[s]).sum();
    }
}

fn receiver_stencils(model: &AcousticModel) -> Vec<Vec<(usize, f64)>> {
    model.receivers.iter().map(|&r| stencil(&model.grid, r)).collect()
}

pub fn forward(model: &AcousticModel, keep_divergence: bool) -> Result<Record> {
    forward_with_source(model, &model.source_samples(), keep_divergence)
}

/// Forward run with explicit source samples `s_n` in place of the wavelet.
pub fn forward_with_source(model: &AcousticModel, source: &[f64], keep_divergence: bool) -> Result<Record> {
    model.validate()?;
    if source.len() != model.nt {
        return Err(FwiError::InvalidModel(format!(
            "{} source samples for {} steps",
            source.len(),
            model.nt
        )));
    }
    let g = model.grid;
    let n = g.n_sites();
    let nr = model.receivers.len();
    let (dt, rho) = (model.dt, model.rho);
    let damp = model.sponge.damping(&g);
    let stiff: Vec<f64> = model.velocity.iter().map(|c| dt * rho * c * c).collect();
    let inv_m: Vec<f64> = model.velocity.iter().map(|c| 1.0 / (rho * c * c)).collect();
    let src = stencil(&g, model.source.node);
    let rec = receiver_stencils(model);
    let inject = 1.0 / g.cell_area();

    let (mut vx, mut vz, mut p) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut tmp, mut div) = (vec![0.0; n], vec![0.0; n]);
    let mut tx = vec![0.0; nr * model.nt];
    let mut tz = vec![0.0; nr * model.nt];
    let mut energy = Vec::with_capacity(model.nt);
    let mut divergence = keep_divergence.then(|| Vec::with_capacity(n * model.nt));

    for step in 0..model.nt {
        for (v, along_x) in [(&mut vx, true), (&mut vz, false)] {
            centered(&g, &p, &mut tmp, along_x);
            for s in 0..n {
                v[s] = damp[s] * (v[s] + dt / rho * tmp[s]);
            }
        }
        centered(&g, &vx, &mut div, true);
        centered(&g, &vz, &mut tmp, false);
        for s in 0..n {
            div[s] += tmp[s];
        }
        for &(s, w) in &src {
            div[s] += w * inject * source[step];
        }
        for s in 0..n {
            p[s] += stiff[s] * div[s];
        }
        for s in 0..n {
            p[s] *= damp[s];
        }
        if let Some(d) = divergence.as_mut() {
            d.extend_from_slice(&div);
        }
        sample(&rec, &vx, step, &mut tx);
        sample(&rec, &vz, step, &mut tz);
        let e: f64 = (0..n)
            .map(|s| rho * (vx[s] * vx[s] + vz[s] * vz[s]) + p[s] * p[s] * inv_m[s])
            .sum::<f64>()
            * g.cell_area();
        if !e.is_finite() {
            return Err(FwiError::Blowup { step });
        }
        energy.push(e);
    }
    let traces = SignedSignal2::new(trace_grid(nr, model.nt)?, tx, tz)?;
    Ok(Record {
        traces,
        energy,
        divergence,
    })
}

/// Reverse sweep for the cotangent `(gx, gz)` of the recorded traces,
/// returning the gradient of the same scalar with respect to the velocity
/// and to the source samples.
pub fn adjoint(model: &AcousticModel, record: &Record, gx: &[f64], gz: &[f64]) -> Result<Gradient> {
    model.validate()?;
    let div_hist = record.divergence.as_ref().ok_or(FwiError::MissingSnapshots)?;
    let g = model.grid;
    let n = g.n_sites();
    let nr = model.receivers.len();
    let nt = model.nt;
    if gx.len() != nr * nt || gz.len() != nr * nt {
        return Err(FwiError::ShapeMismatch(format!(
            "adjoint sources have {} and {} samples, expected {}",
            gx.len(),
            gz.len(),
            nr * nt
        )));
    }
    if div_hist.len() != n * nt {
        return Err(FwiError::MissingSnapshots);
    }
    let (dt, rho) = (model.dt, model.rho);
    let damp = model.sponge.damping(&g);
    let stiff: Vec<f64> = model.velocity.iter().map(|c| dt * rho * c * c).collect();
    let src = stencil(&g, model.source.node);
    let rec = receiver_stencils(model);
    let inject = 1.0 / g.cell_area();

    let (mut lvx, mut lvz, mut lp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut lw, mut klw, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut grad = vec![0.0; n];
    let mut source_grad = vec![0.0; nt];

    for step in (0..nt).rev() {
        let div = &div_hist[step * n..(step + 1) * n];
        for s in 0..n {
            lw[s] = damp[s] * lp[s];
            klw[s] = stiff[s] * lw[s];
            grad[s] += 2.0 * stiff[s] / model.velocity[s] * div[s] * lw[s];
        }
        source_grad[step] = inject * src.iter().map(|&(s, w)| w * klw[s]).sum::<f64>();
        lp.copy_from_slice(&lw);
        for (lv, cot, along_x) in [(&mut lvx, gx, true), (&mut lvz, gz, false)] {
            for (r, st) in rec.iter().enumerate() {
                for &(s, w) in st {
                    lv[s] += w * cot[step * nr + r];
                }
            }
            // Cᵀ = -C.
            centered(&g, &klw, &mut tmp, along_x);
            for s in 0..n {
                lv[s] = damp[s] * (lv[s] - tmp[s]);
            }
            centered(&g, lv, &mut tmp, along_x);
            for s in 0..n {
                lp[s] -= dt / rho * tmp[s];
            }
        }
        if step % 64 == 0 && !lp.iter().all(|x| x.is_finite()) {
            return Err(FwiError::Blowup { step });
        }
    }
    Ok(Gradient {
        velocity: grad,
        source: source_grad,
    })
}
