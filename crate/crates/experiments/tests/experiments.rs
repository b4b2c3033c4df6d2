use proptest::prelude::*;
use uvot_core::lift::lift_lorentz;
use uvot_core::sdmm::scale_lambda;
use uvot_core::{solve, Grid2, LiftKind, Power, SignedSignal2, SolverConfig, TransportProblem};
use uvot_experiments::seismo::{load_seismogram, save_seismogram_csv, seismo_transport, SeismogramSpec};
use uvot_experiments::shift::{misfit, shift_scan, ShiftMisfit, ShiftScanSpec};

fn small_spec() -> ShiftScanSpec {
    ShiftScanSpec {
        samples: 256,
        t0_min: -4.0,
        t0_max: 4.0,
        t0_count: 9,
        ..ShiftScanSpec::default()
    }
}

#[test]
fn zero_shift_costs_nothing_for_every_misfit() {
    let spec = small_spec();
    let s = spec.signal(0.0).unwrap();
    for name in ["l2", "kr", "t11", "t12", "t22"] {
        let kind = ShiftMisfit::parse(name, 2.0).unwrap();
        let (v, _, _) = misfit(&kind, &s, &s, spec.lift, &spec.solver).unwrap();
        assert_eq!(v, 0.0, "{name}");
    }
}

#[test]
fn l2_curve_is_symmetric_in_the_shift() {
    let spec = small_spec();
    let curve = shift_scan(&spec, &ShiftMisfit::L2).unwrap();
    let n = curve.len();
    for k in 0..n / 2 {
        let (a, b) = (curve[k], curve[n - 1 - k]);
        assert_eq!(a.t0, -b.t0);
        assert!((a.value - b.value).abs() <= 1e-9 * a.value, "{a:?} vs {b:?}");
    }
}

#[test]
fn lifted_transport_curve_is_symmetric_in_the_shift() {
    let spec = small_spec();
    let kind = ShiftMisfit::parse("t12", 2.0).unwrap();
    let curve = shift_scan(&spec, &kind).unwrap();
    assert!(curve.iter().all(|p| p.converged));
    let n = curve.len();
    for k in 0..n / 2 {
        let (a, b) = (curve[k].value, curve[n - 1 - k].value);
        assert!((a - b).abs() <= 1e-3 * a, "{a} vs {b}");
    }
}

fn seismogram(nr: usize, nt: usize, shift: f64) -> SignedSignal2 {
    let g = Grid2::new(nr, nt, 10.0, 1e-3).unwrap();
    let n = g.n_sites();
    let wave = |s: usize| {
        let (i, j) = ((s % nr) as f64, (s / nr) as f64);
        let t = j - 10.0 - shift - 0.5 * i;
        (-t * t / 8.0).exp()
    };
    SignedSignal2::new(g, (0..n).map(|s| 0.5 * wave(s)).collect(), (0..n).map(|s| -wave(s) * (s % 2) as f64).collect())
        .unwrap()
}

fn spec(nr: usize, nt: usize) -> SeismogramSpec {
    SeismogramSpec {
        receivers: nr,
        samples: nt,
        duration: 1e-3 * (nt - 1) as f64,
        extent: 10.0 * (nr - 1) as f64,
        mean_velocity: 2000.0,
        lift: LiftKind::Pauli,
    }
}

fn config() -> SolverConfig {
    SolverConfig {
        eps: 1e-5,
        max_iter: 40_000,
        auto_tau: true,
        ..SolverConfig::default()
    }
}

#[test]
fn identical_seismograms_have_zero_delta_and_cost() {
    let s = seismogram(12, 40, 0.0);
    for q in [Power::One, Power::Two] {
        let r = seismo_transport(&spec(12, 40), &s, &s, 0.1, Power::One, q, &config()).unwrap();
        assert_eq!(r.result.cost, 0.0);
        assert!(r.result.delta.as_slice().iter().all(|&d| d == 0.0));
    }
}

#[test]
fn seismogram_shapes_must_match_the_spec() {
    let s = seismogram(12, 40, 0.0);
    assert!(seismo_transport(&spec(12, 41), &s, &s, 0.1, Power::One, Power::One, &config()).is_err());
}

/// Stretching the domain by `L` at fixed densities with
/// `λ' = scale_lambda(λ, L, 1)` keeps `δ` up to its peak.
#[test]
fn axis_rescaling_keeps_the_transport_regime() {
    let (a, b) = (seismogram(16, 32, 0.0), seismogram(16, 32, 4.0));
    let sp = spec(16, 32);
    let (a, b) = (sp.rescale(a).unwrap(), sp.rescale(b).unwrap());
    let big = 3.0;
    for q in [Power::One, Power::Two] {
        let lambda = 2.0;
        let run = |s: f64, l: f64| {
            let g = a.grid().scaled(s).unwrap();
            let lift = |x: &SignedSignal2| lift_lorentz(&x.clone().with_grid(g).unwrap(), LiftKind::Pauli);
            let r = solve(&TransportProblem::new(lift(&a), lift(&b), l, Power::One, q).unwrap(), &config()).unwrap();
            assert!(r.converged);
            let mut d = r.delta;
            let norm = d.norm_linf();
            d.scale(1.0 / norm);
            d
        };
        let base = run(1.0, lambda);
        let scaled = run(big, scale_lambda(lambda, big, 1.0, q).unwrap());
        let diff = base.max_abs_diff(&scaled);
        assert!(diff <= 2e-2, "{q:?}: normalized δ differs by {diff:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn seismogram_csv_round_trips(nr in 1usize..6, nt in 2usize..9, seed in 0u64..1000) {
        let g = Grid2::new(nr, nt, 1.0, 1.0).unwrap();
        let val = |s: usize, k: u64| (((s as u64 + 1) * (seed + k)) % 97) as f64 / 7.0 - 3.0;
        let n = g.n_sites();
        let s = SignedSignal2::new(g, (0..n).map(|i| val(i, 1)).collect(), (0..n).map(|i| val(i, 5)).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        save_seismogram_csv(&path, &s).unwrap();
        let back = load_seismogram(&path).unwrap();
        prop_assert_eq!(back.vx(), s.vx());
        prop_assert_eq!(back.vz(), s.vz());
        prop_assert_eq!((back.grid().nx(), back.grid().ny()), (nr, nt));
    }
}
