//! Forward-difference gradient, its negative adjoint, and the Laplacian.
//!
//! `V^d` sites store component `k` along axis `l` at offset `k * 2 + l`.

use crate::field::{FieldV, FieldVd};
use crate::vector::D;

/// `(grad u)_{i,j} = ((u_{i+1,j} - u_{i,j}) / h_x, (u_{i,j+1} - u_{i,j}) / h_y)`,
/// with zero differences on the last column and row.
pub fn grad(u: &FieldV) -> FieldVd {
    let mut out = FieldVd::zeros(*u.grid(), u.n());
    grad_into(u, &mut out);
    out
}

pub fn grad_into(u: &FieldV, out: &mut FieldVd) {
    let g = *u.grid();
    let n = u.n();
    assert!(out.grid().same_shape(&g) && out.n() == n);
    let (nx, ny) = (g.nx(), g.ny());
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let m = n * D;
    let src = u.as_slice();
    if n == 1 {
        grad_scalar(src, out.as_mut_slice(), nx, ny, ihx, ihy);
        return;
    }
    for (j, out_row) in out.as_mut_slice().chunks_exact_mut(nx * m).enumerate() {
        let row = &src[j * nx * n..(j + 1) * nx * n];
        let next = (j + 1 < ny).then(|| &src[(j + 1) * nx * n..(j + 2) * nx * n]);
        for (i, w) in out_row.chunks_exact_mut(m).enumerate() {
            let here = &row[i * n..(i + 1) * n];
            let east = (i + 1 < nx).then(|| &row[(i + 1) * n..(i + 2) * n]);
            let north = next.map(|r| &r[i * n..(i + 1) * n]);
            for k in 0..n {
                w[k * D] = east.map_or(0.0, |e| (e[k] - here[k]) * ihx);
                w[k * D + 1] = north.map_or(0.0, |nn| (nn[k] - here[k]) * ihy);
            }
        }
    }
}

/// Discrete divergence, defined by `<div w, u>_X = -<w, grad u>_{X^d}`.
pub fn div(w: &FieldVd) -> FieldV {
    let mut out = FieldV::zeros(*w.grid(), w.n());
    div_into(w, &mut out);
    out
}

/// Built as the scatter transpose of [`grad_into`]: every forward difference
/// `(u_b - u_a) / h` contributes `+w / h` to site `a` and `-w / h` to site `b`.
pub fn div_into(w: &FieldVd, out: &mut FieldV) {
    let g = *w.grid();
    let n = w.n();
    assert!(out.grid().same_shape(&g) && out.n() == n);
    let (nx, ny) = (g.nx(), g.ny());
    let (ihx, ihy) = (1.0 / g.hx(), 1.0 / g.hy());
    let m = n * D;
    let src = w.as_slice();
    let dst = out.as_mut_slice();
    if n == 1 {
        div_scalar(src, dst, nx, ny, ihx, ihy);
        return;
    }
    for j in 0..ny {
        let wrow = &src[j * nx * m..(j + 1) * nx * m];
        let (head, tail) = dst.split_at_mut((j + 1) * nx * n);
        let row = &mut head[j * nx * n..];
        if j == 0 {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        // x fluxes: site a gets +w/h, its east neighbour -w/h.
        for k in 0..n {
            let mut prev = 0.0;
            for i in 0..nx {
                let f = if i + 1 < nx { wrow[i * m + k * D] * ihx } else { 0.0 };
                row[i * n + k] += f - prev;
                prev = f;
            }
        }
        // y fluxes: +w/h here and -w/h on the next row, which this initializes.
        if j + 1 < ny {
            let above = &mut tail[..nx * n];
            for i in 0..nx {
                for k in 0..n {
                    let f = wrow[i * m + k * D + 1] * ihy;
                    row[i * n + k] += f;
                    above[i * n + k] = -f;
                }
            }
        }
    }
}

fn grad_scalar(src: &[f64], dst: &mut [f64], nx: usize, ny: usize, ihx: f64, ihy: f64) {
    for j in 0..ny {
        let row = &src[j * nx..(j + 1) * nx];
        let out = &mut dst[j * nx * D..(j + 1) * nx * D];
        if j + 1 < ny {
            let next = &src[(j + 1) * nx..(j + 2) * nx];
            for ((w, h), nn) in out.chunks_exact_mut(D).zip(row).zip(next) {
                w[1] = (nn - h) * ihy;
            }
        } else {
            out.chunks_exact_mut(D).for_each(|w| w[1] = 0.0);
        }
        for (w, pair) in out.chunks_exact_mut(D).zip(row.windows(2)) {
            w[0] = (pair[1] - pair[0]) * ihx;
        }
        out[(nx - 1) * D] = 0.0;
    }
}

fn div_scalar(src: &[f64], dst: &mut [f64], nx: usize, ny: usize, ihx: f64, ihy: f64) {
    for j in 0..ny {
        let w = &src[j * nx * D..(j + 1) * nx * D];
        let row = &mut dst[j * nx..(j + 1) * nx];
        let below = (j > 0).then(|| &src[(j - 1) * nx * D..j * nx * D]);
        let top = j + 1 < ny;
        for i in 0..nx {
            let east = if i + 1 < nx { w[i * D] } else { 0.0 };
            let west = if i > 0 { w[(i - 1) * D] } else { 0.0 };
            let north = if top { w[i * D + 1] } else { 0.0 };
            let south = below.map_or(0.0, |b| b[i * D + 1]);
            row[i] = (east - west) * ihx + (north - south) * ihy;
        }
    }
}

/// `div(grad u)`; negative semi-definite with constants as kernel.
pub fn laplacian(u: &FieldV) -> FieldV {
    div(&grad(u))
}
