use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvot_core::elliptic::solve_h1;
use uvot_core::{FieldV, Grid2, Power, TransportProblem};

/// Dense `-Δ + 1/λ` with Neumann ends, built from the stencil.
fn dense_operator(g: &Grid2, shift: f64) -> DMatrix<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let n = nx * ny;
    let mut a = DMatrix::identity(n, n) * shift;
    let pairs = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .flat_map(|(i, j)| {
            let s = j * nx + i;
            let east = (i + 1 < nx).then(|| (s, s + 1, 1.0 / (g.hx() * g.hx())));
            let north = (j + 1 < ny).then(|| (s, s + nx, 1.0 / (g.hy() * g.hy())));
            east.into_iter().chain(north)
        });
    for (s, t, w) in pairs {
        a[(s, s)] += w;
        a[(t, t)] += w;
        a[(s, t)] -= w;
        a[(t, s)] -= w;
    }
    a
}

/// Dual value `<φ, d> - |φ|²/(2λ) - |∇φ|²/2` at the solution of the normal
/// equations equals `<φ, d>/2`, with `h`-weights.
fn dense_cost(g: &Grid2, lambda: f64, diff: &[f64]) -> (f64, Vec<f64>) {
    let a = dense_operator(g, 1.0 / lambda);
    let phi = a.lu().solve(&DVector::from_column_slice(diff)).unwrap();
    let w = g.cell_area();
    let value = 0.5 * w * phi.iter().zip(diff).map(|(p, d)| p * d).sum::<f64>();
    (value, phi.iter().copied().collect())
}

#[test]
fn matches_dense_direct_solve_on_8x8() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..20 {
        let g = Grid2::new(8, 8, rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)).unwrap();
        let lambda = 10f64.powf(rng.gen_range(-2.0..2.0));
        let n = 1 + trial % 3;
        let mk = |rng: &mut ChaCha8Rng| {
            FieldV::from_vec(g, n, (0..64 * n).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap()
        };
        let (mu, nu) = (mk(&mut rng), mk(&mut rng));
        let diff = nu.sub(&mu);
        let r = solve_h1(&TransportProblem::new(mu, nu, lambda, Power::Two, Power::Two).unwrap()).unwrap();

        let mut expected = 0.0;
        for k in 0..n {
            let (c, phi) = dense_cost(&g, lambda, &diff.component(k));
            expected += c;
            let got = r.phi.component(k);
            let err = got.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(err <= 1e-10 * scale, "trial {trial}: potential error {err:e}");
        }
        let rel = (r.cost - expected).abs() / expected.abs();
        assert!(rel < 1e-9, "trial {trial}: cost {} vs {expected} ({rel:e})", r.cost);
        assert!(r.residual < 1e-10, "trial {trial}: residual {:e}", r.residual);
        assert!(r.gap < 1e-9, "trial {trial}: gap {:e}", r.gap);
    }
}
