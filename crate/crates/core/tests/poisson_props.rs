mod common;

use std::f64::consts::PI;

use common::rng;
use otha_core::measures::{DiscreteMeasure, Point};
use otha_core::poisson2d::{
    circle_measure_coefficients, mollify, solve_neumann, FourierBoundaryData, PoissonSolution,
};
use otha_core::quadrature::GaussLegendre;
use otha_core::Error;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_solution(r: &mut ChaCha8Rng) -> PoissonSolution {
    let radius = r.gen_range(1.0..3.0);
    let order = r.gen_range(1..24);
    let mut coeff = |n: usize| r.gen_range(-1.0..1.0) / n as f64;
    let a: Vec<f64> = (1..=order).map(&mut coeff).collect();
    let b: Vec<f64> = (1..=order).map(&mut coeff).collect();
    let c = r.gen_range(-1.0..1.0);
    let data = FourierBoundaryData::new(radius, a, b).unwrap().with_mean(-c * radius / 2.0);
    solve_neumann(c, data).unwrap()
}

fn random_interior(r: &mut ChaCha8Rng, radius: f64) -> Point {
    Point::from_polar(radius * r.gen_range(0.0f64..1.0).sqrt(), r.gen_range(0.0..2.0 * PI))
}

/// Polar tensor quadrature of `f` over the disk: Gauss-Legendre in the
/// radius, trapezoid in the angle.
fn disk_integral(radius: f64, f: impl Fn(Point) -> f64) -> f64 {
    let gl = GaussLegendre::new(48);
    let m = 512;
    gl.integrate(0.0, radius, |rho| {
        let ring: f64 = (0..m)
            .map(|k| f(Point::from_polar(rho, 2.0 * PI * k as f64 / m as f64)))
            .sum();
        ring * 2.0 * PI / m as f64 * rho
    })
}

#[test]
fn interior_equation() {
    let mut r = rng(1);
    for _ in 0..20 {
        let sol = random_solution(&mut r);
        for _ in 0..100 {
            let p = random_interior(&mut r, sol.radius());
            let h = sol.eval(p).unwrap().hessian;
            assert!((h[0][0] + h[1][1] + sol.source()).abs() <= 1e-9);
        }
    }
}

#[test]
fn neumann_trace_reproduces_the_flux() {
    let mut r = rng(2);
    for _ in 0..20 {
        let sol = random_solution(&mut r);
        let radius = sol.radius();
        for k in 0..256 {
            let theta = 2.0 * PI * k as f64 / 256.0;
            let p = Point::from_polar(radius, theta);
            let g = sol.eval(p).unwrap().grad;
            let dr = (g[0] * p.x + g[1] * p.y) / radius;
            let flux = sol.boundary().density(theta);
            assert!((dr - flux).abs() <= 1e-9, "{dr} vs {flux}");
        }
    }
}

#[test]
fn zero_mean_normalization() {
    let mut r = rng(3);
    for _ in 0..10 {
        let sol = random_solution(&mut r);
        let radius = sol.radius();
        let integral = disk_integral(radius, |p| sol.eval(p).unwrap().phi);
        let scale = disk_integral(radius, |p| sol.eval(p).unwrap().phi.abs()).max(1e-300);
        assert!(integral.abs() <= 1e-4 * radius * radius * scale, "{integral}");
    }
}

#[test]
fn parseval_energy_matches_quadrature() {
    let mut r = rng(4);
    for _ in 0..10 {
        let sol = random_solution(&mut r);
        let radius = sol.radius();
        let grad_sq = |p: Point| {
            let g = sol.eval(p).unwrap().grad;
            g[0] * g[0] + g[1] * g[1]
        };
        let q = disk_integral(radius, grad_sq);
        let e = sol.dirichlet_energy();
        assert!((q - e).abs() <= 1e-4 * e, "{q} vs {e}");
        let rho = 0.6 * radius;
        let q_in = disk_integral(rho, grad_sq);
        assert!((q_in - sol.energy_in(rho)).abs() <= 1e-4 * q_in);
    }
}

#[test]
fn integration_by_parts() {
    // ∫|∇φ|² = ∫_∂ φ ∂_rφ + c ∫ φ, and the last term vanishes
    let mut r = rng(5);
    for _ in 0..10 {
        let sol = random_solution(&mut r);
        let radius = sol.radius();
        let m = 2048;
        let boundary: f64 = (0..m)
            .map(|k| {
                let p = Point::from_polar(radius, 2.0 * PI * k as f64 / m as f64);
                let e = sol.eval(p).unwrap();
                e.phi * (e.grad[0] * p.x + e.grad[1] * p.y) / radius
            })
            .sum::<f64>()
            * 2.0 * PI * radius
            / m as f64;
        let e = sol.dirichlet_energy();
        assert!((boundary - e).abs() <= 1e-6 * e, "{boundary} vs {e}");
    }
}

#[test]
fn trace_poincare() {
    let mut r = rng(6);
    for _ in 0..30 {
        let radius = r.gen_range(0.5..4.0);
        let order = r.gen_range(1..20);
        let a = (0..order).map(|_| r.gen_range(-1.0..1.0)).collect();
        let b = (0..order).map(|_| r.gen_range(-1.0..1.0)).collect();
        let sol = solve_neumann(0.0, FourierBoundaryData::new(radius, a, b).unwrap()).unwrap();
        assert!(sol.boundary_l2_sq() <= radius * sol.dirichlet_energy() * (1.0 + 1e-12));
    }
    let radius = 2.0;
    let mode1 = FourierBoundaryData::new(radius, vec![0.3], vec![-0.7]).unwrap();
    let sol = solve_neumann(0.0, mode1).unwrap();
    let ratio = sol.boundary_l2_sq() / sol.dirichlet_energy();
    assert!(ratio >= 0.99 * radius && ratio <= radius * (1.0 + 1e-12), "{ratio}");
}

#[test]
fn gradient_is_harmonic_up_to_the_radial_part() {
    let mut r = rng(7);
    let h = 1e-4;
    for _ in 0..10 {
        let sol = random_solution(&mut r);
        let c = sol.source();
        for _ in 0..20 {
            let p = random_interior(&mut r, 0.9 * sol.radius());
            // Δ(∂_iφ + c x_i/2) = ∂_i(Δφ) by central differences of the trace
            for dir in [Point::new(h, 0.0), Point::new(0.0, h)] {
                let tr = |q: Point| {
                    let e = sol.eval(q).unwrap().hessian;
                    e[0][0] + e[1][1] + c
                };
                let d = (tr(p + dir) - tr(p - dir)) / (2.0 * h);
                assert!(d.abs() <= 1e-6, "{d}");
            }
        }
    }
}

#[test]
fn sup_bounds_dominate_sampling() {
    let mut r = rng(8);
    for _ in 0..5 {
        let radius = 2.0;
        let pts: Vec<Point> = (0..15)
            .map(|_| Point::from_polar(radius, r.gen_range(0.0..2.0 * PI)))
            .collect();
        let m = common::equal(pts, 1.0);
        let data = mollify(&circle_measure_coefficients(&m, radius, 128).unwrap(), 0.2).unwrap();
        let mean = data.mean().unwrap();
        let c = -2.0 * mean / radius;
        let sol = solve_neumann(c, data).unwrap();
        let (gb, hb) = sol.sup_bounds();
        let mut g_max = 0.0f64;
        let mut h_max = 0.0f64;
        for _ in 0..10_000 {
            let e = sol.eval(random_interior(&mut r, radius)).unwrap();
            g_max = g_max.max(e.grad[0].hypot(e.grad[1]));
            let [[a, b], [_, d]] = e.hessian;
            // operator norm of a symmetric 2x2 matrix
            let spec = ((a + d) / 2.0).abs() + (((a - d) / 2.0).powi(2) + b * b).sqrt();
            h_max = h_max.max(spec);
        }
        assert!(g_max <= gb && h_max <= hb, "{g_max} {gb} {h_max} {hb}");
    }
}

#[test]
fn mollified_density_of_a_measure_is_nonnegative() {
    let mut r = rng(9);
    let radius = 2.5;
    let pts: Vec<Point> = (0..10)
        .map(|_| Point::from_polar(radius, r.gen_range(0.0..2.0 * PI)))
        .collect();
    let m = DiscreteMeasure::uniform_weights(pts, 0.3).unwrap();
    let raw = circle_measure_coefficients(&m, radius, 128).unwrap();
    let data = mollify(&raw, 0.2).unwrap();
    for k in 0..2000 {
        assert!(data.density(2.0 * PI * k as f64 / 2000.0) >= -1e-12);
    }
    // total mass is preserved by the heat kernel
    let total: f64 = (0..4096)
        .map(|k| data.density(2.0 * PI * k as f64 / 4096.0))
        .sum::<f64>()
        * 2.0 * PI * radius
        / 4096.0;
    assert!((total - m.mass()).abs() <= 1e-9);
}

#[test]
fn rejects_points_outside_and_incompatible_data() {
    let data = FourierBoundaryData::zero(1.0, 4).unwrap();
    let sol = solve_neumann(0.0, data.clone()).unwrap();
    assert!(matches!(sol.eval(Point::new(1.1, 0.0)), Err(Error::OutOfDomain(..))));
    assert!(sol.eval(Point::new(1.0, 0.0)).is_ok());
    assert!(matches!(solve_neumann(1.0, data.with_mean(0.0)), Err(Error::InfeasibleInput(_))));
}
