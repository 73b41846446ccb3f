mod common;

use std::f64::consts::PI;

use common::{jittered_lattice, rng};
use otha_core::boundary_approx::{
    approx_quality_with, compose_triple, projection_plan, projection_ratio, radial_concentration,
    rearrangement_brute_force, rearrangement_oracle, regularized_boundary, ApproxParams,
    AuxiliaryPlans,
};
use otha_core::measures::Point;
use otha_core::ot::solve_quadratic;
use rand::Rng;

#[test]
fn radial_projection_at_most_doubles_distances() {
    let mut r = rng(21);
    for _ in 0..20_000 {
        let radius = r.gen_range(0.5..4.0);
        let p = Point::from_polar(radius, r.gen_range(0.0..2.0 * PI));
        let z = Point::from_polar(r.gen_range(1e-3..3.0 * radius), r.gen_range(0.0..2.0 * PI));
        if let Some(q) = projection_ratio(p, z, radius) {
            assert!(q <= 2.0 + 1e-9, "p {p:?} z {z:?}: {q}");
        }
    }
}

#[test]
fn composed_plans_have_the_right_marginals() {
    for seed in 0..3 {
        let (lambda, mu) = jittered_lattice(0.5, 0.15, 0.1, seed);
        let pi = solve_quadratic(&lambda, &mu).unwrap().coupling;
        let pibar = projection_plan(&mu, 0.5).unwrap();
        assert!(pibar.marginal_error() <= 1e-12);
        let t = compose_triple(&pi, &pibar).unwrap();
        let (a, b) = t.marginal_errors(&pi, &pibar);
        assert!(a <= 1e-12 && b <= 1e-12);
    }
}

#[test]
fn boundary_approximation_within_constant_eight() {
    let params = ApproxParams { h: 0.5, fourier_n: 64, mollify_r: 0.2 };
    for seed in 0..3 {
        let (lambda, mu) = jittered_lattice(0.5, 0.2, 0.15, seed);
        let pi = solve_quadratic(&lambda, &mu).unwrap().coupling;
        let aux = AuxiliaryPlans::new(&pi, params.h).unwrap();
        for k in 0..5 {
            let radius = 2.0 + k as f64 / 4.0;
            let rep = approx_quality_with(&pi, &aux, radius, &params).unwrap();
            assert!(rep.w2_g_gbar <= rep.bound_ao97 + 1e-9);
            assert!(rep.w2_f_fbar <= rep.bound_ao97 + 1e-9);
            assert!(rep.projection_ratio <= 2.0 + 1e-9);
            let rb = regularized_boundary(&pi, &aux, radius).unwrap();
            for p in rb.gbar.gbar.points().iter().chain(rb.fbar.gbar.points()) {
                assert!((p.norm() - radius).abs() <= 1e-9);
            }
            assert!((rb.gbar.gbar.mass() - rb.g.mass()).abs() <= 1e-12 * lambda.mass());
        }
    }
}

/// The radial concentration of `g'` averaged over `[2, 3]` stays below
/// `(3/2)E + (1/2)D`; the in-cell discretization slack is not needed here.
#[test]
fn averaged_radial_concentration() {
    for seed in 0..3 {
        let h = 0.5;
        let (lambda, mu) = jittered_lattice(h, 0.2, 0.15, seed);
        let pi = solve_quadratic(&lambda, &mu).unwrap().coupling;
        let aux = AuxiliaryPlans::new(&pi, h).unwrap();
        let grid: Vec<f64> = (0..9).map(|k| 2.0 + k as f64 / 8.0).collect();
        let avg = grid
            .iter()
            .map(|&radius| {
                let rb = regularized_boundary(&pi, &aux, radius).unwrap();
                radial_concentration(&rb.gbar.gprime, radius)
            })
            .sum::<f64>()
            / grid.len() as f64;
        let bound = 1.5 * aux.energy + 0.5 * aux.data.d;
        assert!(avg <= bound, "seed {seed}: {avg} > {bound}");
    }
}

#[test]
fn rearrangement_minimum() {
    let levels = [0.0, 0.5, 1.0];
    let brute = rearrangement_brute_force(1.0, &levels, 12, 1.0, 1e-9).unwrap();
    let oracle = rearrangement_oracle(1.0, 1.0);
    let cell = 2.0 / 12.0;
    // the closed form is a lower bound for every admissible profile, and
    // the grid attains it up to one cell width
    assert!(oracle <= brute + 1e-12);
    assert!(brute - oracle <= cell);
    assert!((oracle - 0.25).abs() < 1e-15);
}
