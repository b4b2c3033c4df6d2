use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvot_core::oracles::{
    fermat_torricelli_brute, q1_scalar_cost, q1_vector_cost, q2_scalar_1d, Branch, TwoDeltaInstance, Variant,
};

fn lorentz_sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let x: f64 = rng.gen_range(-1.0..1.0);
    let y: f64 = rng.gen_range(-1.0..1.0);
    let t = x.hypot(y) * rng.gen_range(1.0..2.0);
    vec![x, y, t]
}

#[test]
fn vector_closed_form_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut seen = std::collections::HashSet::new();
    for trial in 0..400 {
        let m1 = lorentz_sample(&mut rng);
        let m2 = if trial % 5 == 0 {
            m1.iter().map(|x| x * rng.gen_range(0.2..3.0)).collect()
        } else {
            lorentz_sample(&mut rng)
        };
        let dist = rng.gen_range(0.1..2.0);
        let lambda = dist * 10f64.powf(rng.gen_range(-1.0..1.5));
        let (closed, branch) = q1_vector_cost(&m1, &m2, lambda, dist);
        let brute = fermat_torricelli_brute(&m1, &m2, lambda, dist);
        seen.insert(format!("{branch:?}"));
        assert!(
            (closed - brute).abs() <= 1e-6 * brute.abs().max(1e-12),
            "trial {trial} ({branch:?}): closed {closed} brute {brute}"
        );
    }
    for b in ["NoTransport", "TransportFirst", "TransportSecond", "Interior"] {
        assert!(seen.contains(b), "branch {b} never sampled");
    }
}

#[test]
fn vector_oracle_reduces_to_scalar_on_a_ray() {
    let e = [0.6, 0.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        let (dist, lambda) = (rng.gen_range(0.1..2.0), rng.gen_range(0.05..3.0));
        let scale = f64::hypot(e[0], e[2]);
        let m1: Vec<f64> = e.iter().map(|x| a * x / scale).collect();
        let m2: Vec<f64> = e.iter().map(|x| b * x / scale).collect();
        let (v, _) = q1_vector_cost(&m1, &m2, lambda, dist);
        let (s, _) = q1_scalar_cost(a, b, lambda, dist);
        assert!((v - s).abs() < 1e-12 * s, "{v} vs {s}");
    }
}

/// `∫ φ²` for the smallest-magnitude 1-Lipschitz φ on the line with
/// `φ(0) = -a`, `φ(dist) = b`: φ is the pointwise projection of 0 onto the
/// interval allowed by the two Lipschitz cones, which is piecewise linear.
fn min_energy(a: f64, b: f64, dist: f64) -> f64 {
    let lo = |x: f64| (-a - x.abs()).max(b - (x - dist).abs());
    let hi = |x: f64| (-a + x.abs()).min(b + (x - dist).abs());
    let phi = |x: f64| lo(x).max(0.0).min(hi(x));
    // Kinks: the two points, the zero crossings of the four cone edges and
    // their pairwise intersections.
    let mut knots = vec![0.0, dist];
    let lines = [(1.0, -a), (-1.0, -a), (1.0, b - dist), (-1.0, b + dist)];
    for &(s, c) in &lines {
        knots.push(-c / s);
    }
    for (i, &(s1, c1)) in lines.iter().enumerate() {
        for &(s2, c2) in &lines[i + 1..] {
            if s1 != s2 {
                knots.push((c2 - c1) / (s1 - s2));
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
        .windows(2)
        .map(|w| {
            let (l, r) = (w[0], w[1]);
            let m = 0.5 * (l + r);
            (r - l) / 6.0 * (phi(l).powi(2) + 4.0 * phi(m).powi(2) + phi(r).powi(2))
        })
        .sum()
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Maximizes `a m1 + b m2 - ∫φ²/(2λ)` over the heights by nested golden
/// section search; the value is concave in `(a, b)`.
fn q2_numeric(m1: f64, m2: f64, lambda: f64, dist: f64) -> (f64, f64, f64) {
    let value = |a: f64, b: f64| a * m1 + b * m2 - min_energy(a, b, dist) / (2.0 * lambda);
    let best_b = |a: f64| golden_max(|b| value(a, b), -a - dist, dist - a);
    let top = (lambda * m1.max(m2)).sqrt() + dist;
    let (a, v) = golden_max(|a| best_b(a).1, -top, top);
    (a, best_b(a).0, v)
}

#[test]
fn q2_closed_form_matches_numeric_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut seen = std::collections::HashSet::new();
    for trial in 0..120 {
        let (m1, m2) = (rng.gen_range(0.05..3.0), rng.gen_range(0.05..3.0));
        let dist = rng.gen_range(0.1..2.0);
        let lambda = 10f64.powf(rng.gen_range(-1.5..1.5));
        let o = q2_scalar_1d(m1, m2, lambda, dist);
        seen.insert(format!("{:?}", o.branch));
        let (a, b, v) = q2_numeric(m1, m2, lambda, dist);
        assert!((o.cost - v).abs() <= 1e-8 * v.abs(), "trial {trial} {:?}: {} vs {v}", o.branch, o.cost);
        assert!((o.a.unwrap() - a).abs() < 1e-5 * (1.0 + a.abs()), "trial {trial}: a {:?} vs {a}", o.a);
        assert!((o.b.unwrap() - b).abs() < 1e-5 * (1.0 + b.abs()), "trial {trial}: b {:?} vs {b}", o.b);
    }
    for b in ["Separate", "Shared", "Dominated"] {
        assert!(seen.contains(b), "branch {b} never sampled");
    }
}

#[test]
fn q2_branch_boundaries_are_continuous() {
    let (m1, m2, dist) = (2.0f64, 0.5f64, 1.0f64);
    // Separate/shared boundary: λ (√m1 + √m2)² = dist².
    let l0 = dist * dist / (m1.sqrt() + m2.sqrt()).powi(2);
    let (lo, hi) = (q2_scalar_1d(m1, m2, l0 * (1.0 - 1e-9), dist), q2_scalar_1d(m1, m2, l0 * (1.0 + 1e-9), dist));
    assert_eq!((lo.branch, hi.branch), (Branch::Separate, Branch::Shared));
    assert!((lo.cost - hi.cost).abs() < 1e-7);
    // Shared/dominated boundary: λ (m1 - m2) = dist².
    let l1 = dist * dist / (m1 - m2);
    let (lo, hi) = (q2_scalar_1d(m1, m2, l1 * (1.0 - 1e-9), dist), q2_scalar_1d(m1, m2, l1 * (1.0 + 1e-9), dist));
    assert_eq!((lo.branch, hi.branch), (Branch::Shared, Branch::Dominated));
    assert!((lo.cost - hi.cost).abs() < 1e-7);
}

proptest! {
    #[test]
    fn scalar_oracle_is_symmetric_and_monotone(
        m1 in 0.01f64..5.0, m2 in 0.01f64..5.0, dist in 0.01f64..5.0, lambda in 0.01f64..5.0, dl in 0.0f64..2.0,
    ) {
        let (c, _) = q1_scalar_cost(m1, m2, lambda, dist);
        let (s, _) = q1_scalar_cost(m2, m1, lambda, dist);
        prop_assert!((c - s).abs() <= 1e-12 * c);
        let (bigger, _) = q1_scalar_cost(m1, m2, lambda + dl, dist);
        prop_assert!(bigger >= c - 1e-12 * c);
        prop_assert!(c <= lambda * (m1 + m2) * (1.0 + 1e-12));
    }

    #[test]
    fn evaluate_dispatches_by_variant(m1 in 0.1f64..2.0, m2 in 0.1f64..2.0, lambda in 0.1f64..2.0) {
        let inst = TwoDeltaInstance { x1: [0.0, 0.0], x2: [0.3, 0.4], m1: vec![m1], m2: vec![m2], lambda, variant: Variant::Q1Scalar };
        prop_assert_eq!(inst.evaluate().unwrap().cost, q1_scalar_cost(m1, m2, lambda, 0.5).0);
        let q2 = TwoDeltaInstance { variant: Variant::Q2Scalar1d, ..inst };
        prop_assert_eq!(q2.evaluate().unwrap().cost, q2_scalar_1d(m1, m2, lambda, 0.5).cost);
    }
}
