use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvot_core::calculus::{div, grad};
use uvot_core::{FieldV, FieldVd, Grid2, PoissonPlan};

/// `-Δ + c` assembled from the five-point Neumann stencil, independently of
/// the grad/div code.
fn dense_operator(g: &Grid2, c: f64) -> DMatrix<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let (wx, wy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let n = nx * ny;
    let mut a = DMatrix::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let s = j * nx + i;
            a[(s, s)] += c;
            let mut link = |t: usize, w: f64| {
                a[(s, s)] += w;
                a[(s, t)] -= w;
            };
            if i > 0 {
                link(s - 1, wx);
            }
            if i + 1 < nx {
                link(s + 1, wx);
            }
            if j > 0 {
                link(s - nx, wy);
            }
            if j + 1 < ny {
                link(s + nx, wy);
            }
        }
    }
    a
}

/// Dense solution; for `c = 0` the rank-one term `11ᵀ` removes the kernel and
/// selects the zero-mean solution of a zero-mean right-hand side.
fn dense_solve(g: &Grid2, c: f64, rhs: &[f64]) -> Vec<f64> {
    let mut a = dense_operator(g, c);
    if c == 0.0 {
        a.add_scalar_mut(1.0);
    }
    let x = a.lu().solve(&DVector::from_column_slice(rhs)).expect("nonsingular");
    x.iter().copied().collect()
}

fn random_rhs(n: usize, zero_mean: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if zero_mean {
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= m);
    }
    v
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

#[test]
fn spectral_solve_matches_dense_lu_up_to_16x16() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let shapes = [(1, 5), (5, 1), (2, 2), (3, 7), (8, 8), (16, 9), (11, 16), (16, 16)];
    for &(nx, ny) in &shapes {
        for &c in &[0.0, 1e-3, 1.0, 37.5] {
            let g = Grid2::new(nx, ny, rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0)).unwrap();
            let rhs = random_rhs(nx * ny, c == 0.0, &mut rng);
            let expected = dense_solve(&g, c, &rhs);
            let plan = PoissonPlan::new(g, c).unwrap();
            let got = plan.solve(&FieldV::from_vec(g, 1, rhs).unwrap()).unwrap();
            let err = rel_err(got.as_slice(), &expected);
            assert!(err < 1e-10, "{nx}x{ny}, c = {c}: relative error {err:e}");
        }
    }
}

#[test]
fn spectrum_matches_dense_eigenvalues() {
    let g = Grid2::new(6, 4, 0.3, 0.7).unwrap();
    let plan = PoissonPlan::new(g, 0.25).unwrap();
    let mut ours = plan.eigenvalues().to_vec();
    let mut dense: Vec<f64> = dense_operator(&g, 0.25).symmetric_eigen().eigenvalues.iter().copied().collect();
    ours.sort_by(f64::total_cmp);
    dense.sort_by(f64::total_cmp);
    for (a, b) in ours.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn multicomponent_solve_is_componentwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid2::new(9, 12, 0.5, 0.25).unwrap();
    let comps: Vec<Vec<f64>> = (0..3).map(|_| random_rhs(g.n_sites(), false, &mut rng)).collect();
    let refs: Vec<&[f64]> = comps.iter().map(Vec::as_slice).collect();
    let rhs = FieldV::from_components(g, &refs).unwrap();
    let out = PoissonPlan::new(g, 2.0).unwrap().solve(&rhs).unwrap();
    for (k, c) in comps.iter().enumerate() {
        assert!(rel_err(&out.component(k), &dense_solve(&g, 2.0, c)) < 1e-10);
    }
}

#[test]
fn singular_problem_rejects_massive_rhs() {
    let g = Grid2::new(8, 8, 1.0, 1.0).unwrap();
    let rhs = FieldV::from_fn(g, 1, |i, _, out| out[0] = 1.0 + i as f64).unwrap();
    assert!(PoissonPlan::new(g, 0.0).unwrap().solve(&rhs).is_err());
    assert!(PoissonPlan::new(g, -1.0).is_err());
}

fn grid_strategy() -> impl Strategy<Value = (Grid2, usize, u64)> {
    (1usize..14, 1usize..14, 0.05f64..3.0, 0.05f64..3.0, 1usize..4, any::<u64>())
        .prop_map(|(nx, ny, hx, hy, n, seed)| (Grid2::new(nx, ny, hx, hy).unwrap(), n, seed))
}

proptest! {
    #[test]
    fn grad_div_adjointness((g, n, seed) in grid_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = FieldV::from_vec(g, n, (0..g.n_sites() * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let w = FieldVd::from_vec(g, n, (0..g.n_sites() * n * 2).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let lhs = w.dot(&grad(&u));
        let rhs = -div(&w).dot(&u);
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(w.norm_l2() * u.norm_l2()));
    }

    #[test]
    fn solve_then_apply_round_trips((g, n, seed) in grid_strategy(), c in 0.01f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rhs = FieldV::from_vec(g, n, (0..g.n_sites() * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let plan = PoissonPlan::new(g, c).unwrap();
        let back = plan.apply(&plan.solve(&rhs).unwrap());
        prop_assert!(back.sub(&rhs).norm_l2() <= 1e-10 * rhs.norm_l2().max(1e-300));
    }
}
