mod common;

use common::{equal, rng, unit_measure};
use otha_core::measures::{DiscreteMeasure, Point};
use otha_core::ot::{check_monotone, solve_quadratic, w2_sorted_1d, wasserstein2};
use proptest::prelude::*;
use rand::Rng;

fn collinear(xs: &[f64]) -> DiscreteMeasure {
    equal(xs.iter().map(|&x| Point::new(x, 0.0)).collect(), 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_sorted_matching_on_a_line(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..60)
    ) {
        let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let w = wasserstein2(&collinear(&xs), &collinear(&ys)).unwrap();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let oracle = w2_sorted_1d(&xs, &ys).unwrap();
        prop_assert!((w - oracle).abs() <= 1e-9 * oracle.max(1e-300) + 1e-15, "{} vs {}", w, oracle);
    }

    #[test]
    fn symmetric(a in unit_measure(12, 3.0), b in unit_measure(12, 3.0)) {
        let ab = wasserstein2(&a, &b).unwrap();
        let ba = wasserstein2(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1e-12));
    }

    #[test]
    fn triangle_inequality(
        a in unit_measure(10, 3.0),
        b in unit_measure(10, 3.0),
        c in unit_measure(10, 3.0),
    ) {
        let ac = wasserstein2(&a, &c).unwrap().sqrt();
        let ab = wasserstein2(&a, &b).unwrap().sqrt();
        let bc = wasserstein2(&b, &c).unwrap().sqrt();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn optimal_plans_are_monotone(a in unit_measure(15, 3.0), b in unit_measure(15, 3.0)) {
        let s = solve_quadratic(&a, &b).unwrap();
        prop_assert!(s.coupling.marginal_error() <= 1e-12);
        let r = check_monotone(&s.coupling, 1e-9);
        prop_assert!(r.monotone, "{:?}", r.worst);
    }

    #[test]
    fn cost_scales_with_mass(a in unit_measure(10, 3.0), b in unit_measure(10, 3.0), s in 0.1f64..10.0) {
        let w = wasserstein2(&a, &b).unwrap();
        let ws = wasserstein2(&a.scaled(s), &b.scaled(s)).unwrap();
        prop_assert!((ws - s * w).abs() <= 1e-9 * (s * w).max(1e-12));
    }

    #[test]
    fn translation_adds_squared_shift(a in unit_measure(10, 3.0), dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let shifted = DiscreteMeasure::new(
            a.points().iter().map(|&p| p + Point::new(dx, dy)).collect(),
            a.weights().to_vec(),
        ).unwrap();
        let w = wasserstein2(&a, &shifted).unwrap();
        let expected = (dx * dx + dy * dy) * a.mass();
        prop_assert!((w - expected).abs() <= 1e-9 * expected.max(1e-12));
    }
}

/// `W(λ, μ) ≤ (√(1+M) − √M)⁻¹ W(λ + Mμ, (1+M)μ)`.
#[test]
fn scaling_inequality() {
    let mut r = rng(11);
    for _ in 0..30 {
        let n = r.gen_range(2..12);
        let pts = |r: &mut rand_chacha::ChaCha8Rng| {
            (0..n).map(|_| Point::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0))).collect()
        };
        let lambda = equal(pts(&mut r), 1.0);
        let mu = equal(pts(&mut r), 1.0);
        let w = wasserstein2(&lambda, &mu).unwrap().sqrt();
        for m in [0.0f64, 1.0, 4.0] {
            let mixed = if m == 0.0 { lambda.clone() } else { lambda.concat(&mu.scaled(m)) };
            let rhs = wasserstein2(&mixed, &mu.scaled(1.0 + m)).unwrap().sqrt()
                / ((1.0 + m).sqrt() - m.sqrt());
            assert!(w <= rhs + 1e-9, "M = {m}: {w} > {rhs}");
        }
    }
}

#[test]
fn unequal_sizes_and_weights() {
    let a = DiscreteMeasure::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0)], vec![0.3, 0.7]).unwrap();
    let b = DiscreteMeasure::new(vec![Point::new(1.0, 0.0)], vec![1.0]).unwrap();
    let s = solve_quadratic(&a, &b).unwrap();
    assert!((s.cost - 1.0).abs() < 1e-12);
    assert_eq!(s.coupling.len(), 2);
}

#[test]
fn deterministic_on_ties() {
    // four equidistant matchings of a square onto its rotation
    let sq = |t: f64| {
        equal(
            (0..4)
                .map(|k| Point::from_polar(1.0, t + k as f64 * std::f64::consts::FRAC_PI_2))
                .collect(),
            1.0,
        )
    };
    let a = solve_quadratic(&sq(0.0), &sq(std::f64::consts::FRAC_PI_4)).unwrap();
    let b = solve_quadratic(&sq(0.0), &sq(std::f64::consts::FRAC_PI_4)).unwrap();
    assert_eq!(a.coupling, b.coupling);
}
