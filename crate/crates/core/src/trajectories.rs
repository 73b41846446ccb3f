//! Straight trajectories of a plan and their interaction with a centered
//! disk: entry and exit times, the localized set `Ω`, boundary measures and
//! crossing statistics.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::measures::{restrict, sum_exact, Ball, Coupling, DiscreteMeasure, Point};
use crate::poisson2d::SmoothField;
use crate::quadrature::GaussLegendre;

/// Anchoring radius of `Ω`.
pub const OMEGA_ANCHOR: f64 = 4.0;
/// Anchoring radius of the local energy.
pub const ENERGY_ANCHOR: f64 = 5.0;
/// Normalized discriminants in `[−TANGENCY_TOL, 0]` count as tangency.
pub const TANGENCY_TOL: f64 = 1e-12;
/// Angular resolution used to merge boundary atoms.
pub const ANGLE_KEY_RESOLUTION: f64 = 1e-9;
/// Default Gauss–Legendre node count per trajectory.
pub const DEFAULT_QUADRATURE_POINTS: usize = 16;

/// How a segment `x → y` meets the closed disk `B̄_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingInfo {
    pub sigma: f64,
    pub tau: f64,
    pub entry_on_boundary: bool,
    pub exit_on_boundary: bool,
    pub entry_point: Point,
    pub exit_point: Point,
}

impl CrossingInfo {
    /// The segment touches the circle.
    pub fn crosses(&self) -> bool {
        self.entry_on_boundary || self.exit_on_boundary
    }
}

fn project(p: Point, radius: f64) -> Point {
    let r = p.norm();
    if r == 0.0 {
        return p;
    }
    (radius / r) * p
}

/// Entry and exit data of `X(t) = x + t(y − x)` with respect to `B̄_R`, or
/// `None` if the segment misses the closed disk.
///
/// Boundary flags use the open-ball predicate of [`Ball::contains`] on the
/// endpoints, so an endpoint exactly on the circle is a boundary event.
/// Boundary entry and exit points are projected onto the circle.
///
/// The roots are always computed from the lexicographically smaller
/// endpoint, so `entry_exit(y, x)` is the exact mirror of `entry_exit(x, y)`
/// (same membership, swapped flags and points, times `1 − τ`, `1 − σ`).
pub fn entry_exit(x: Point, y: Point, radius: f64) -> Option<CrossingInfo> {
    let forward = x.x.total_cmp(&y.x).then(x.y.total_cmp(&y.y)).is_le();
    if forward {
        return entry_exit_oriented(x, y, radius);
    }
    entry_exit_oriented(y, x, radius).map(|i| CrossingInfo {
        sigma: 1.0 - i.tau,
        tau: 1.0 - i.sigma,
        entry_on_boundary: i.exit_on_boundary,
        exit_on_boundary: i.entry_on_boundary,
        entry_point: i.exit_point,
        exit_point: i.entry_point,
    })
}

fn entry_exit_oriented(x: Point, y: Point, radius: f64) -> Option<CrossingInfo> {
    let ball = Ball::new(radius).ok()?;
    let x_in = ball.contains(x);
    let y_in = ball.contains(y);
    let d = y - x;
    let a = d.norm_sq();

    let (sigma, tau) = if a == 0.0 {
        if x.norm_sq() <= radius * radius {
            (0.0, 1.0)
        } else {
            return None;
        }
    } else {
        // t² + B t + C = 0 for |X(t)|² = R²
        let b = 2.0 * x.dot(d) / a;
        let c = (x.norm_sq() - radius * radius) / a;
        let disc = b * b - 4.0 * c;
        let (t1, t2) = if disc > 0.0 {
            let sign = if b >= 0.0 { 1.0 } else { -1.0 };
            let q = -0.5 * (b + sign * disc.sqrt());
            let (r1, r2) = (q, c / q);
            if r1 <= r2 {
                (r1, r2)
            } else {
                (r2, r1)
            }
        } else if disc >= -TANGENCY_TOL {
            (-0.5 * b, -0.5 * b)
        } else if x_in || y_in {
            (0.0, 1.0)
        } else {
            return None;
        };
        if !(x_in || y_in) && (t2 < 0.0 || t1 > 1.0) {
            return None;
        }
        (t1.max(0.0), t2.min(1.0))
    };

    let entry_on_boundary = !x_in;
    let exit_on_boundary = !y_in;
    let (sigma, entry_point) = if entry_on_boundary {
        (sigma, project(x.lerp(y, sigma), radius))
    } else {
        (0.0, x)
    };
    let (tau, exit_point) = if exit_on_boundary {
        let tau = tau.max(sigma);
        (tau, project(x.lerp(y, tau), radius))
    } else {
        (1.0, y)
    };
    Some(CrossingInfo {
        sigma,
        tau,
        entry_on_boundary,
        exit_on_boundary,
        entry_point,
        exit_point,
    })
}

fn anchored(x: Point, y: Point, anchor: f64) -> bool {
    let r2 = anchor * anchor;
    x.norm_sq() < r2 || y.norm_sq() < r2
}

/// Membership in `Ω`: anchored in `B_4` and meeting `B̄_R`.
pub fn omega_member(x: Point, y: Point, radius: f64) -> bool {
    omega_info(x, y, radius).is_some()
}

/// [`entry_exit`] restricted to `B_4`-anchored pairs.
pub fn omega_info(x: Point, y: Point, radius: f64) -> Option<CrossingInfo> {
    if anchored(x, y, OMEGA_ANCHOR) {
        entry_exit(x, y, radius)
    } else {
        None
    }
}

/// `Ω` members of a plan, as `(entry index, crossing data)`.
pub fn omega_entries(c: &Coupling, radius: f64) -> Vec<(usize, CrossingInfo)> {
    c.pairs()
        .enumerate()
        .filter_map(|(k, (x, y, _))| omega_info(x, y, radius).map(|info| (k, info)))
        .collect()
}

/// Boundary measures together with the atom each plan entry feeds.
#[derive(Debug, Clone)]
pub struct BoundaryMeasures {
    pub f: DiscreteMeasure,
    pub g: DiscreteMeasure,
    /// For every plan entry, the `f` atom of its entry point, if any.
    pub f_atom: Vec<Option<usize>>,
    /// For every plan entry, the `g` atom of its exit point, if any.
    pub g_atom: Vec<Option<usize>>,
}

/// Merges circle points whose angles agree to [`ANGLE_KEY_RESOLUTION`].
#[derive(Default)]
pub(crate) struct CircleAtoms {
    index: HashMap<i64, usize>,
    points: Vec<Point>,
    weights: Vec<Vec<f64>>,
}

impl CircleAtoms {
    pub(crate) fn key(p: Point) -> i64 {
        (p.angle() / ANGLE_KEY_RESOLUTION).round() as i64
    }

    pub(crate) fn add(&mut self, p: Point, mass: f64) -> usize {
        let key = Self::key(p);
        let next = self.points.len();
        let k = *self.index.entry(key).or_insert(next);
        if k == next {
            self.points.push(p);
            self.weights.push(Vec::new());
        }
        self.weights[k].push(mass);
        k
    }

    pub(crate) fn finish(self) -> DiscreteMeasure {
        let weights = self.weights.into_iter().map(sum_exact).collect();
        DiscreteMeasure::new(self.points, weights)
            .expect("boundary atoms have finite positive mass")
    }
}

/// Entry and exit distributions `f`, `g` of `Ω` on `∂B_R`, with atom maps.
pub fn boundary_measures_indexed(c: &Coupling, radius: f64) -> BoundaryMeasures {
    let mut f = CircleAtoms::default();
    let mut g = CircleAtoms::default();
    let mut f_atom = vec![None; c.len()];
    let mut g_atom = vec![None; c.len()];
    for (k, info) in omega_entries(c, radius) {
        let mass = c.entries()[k].mass;
        if info.entry_on_boundary {
            f_atom[k] = Some(f.add(info.entry_point, mass));
        }
        if info.exit_on_boundary {
            g_atom[k] = Some(g.add(info.exit_point, mass));
        }
    }
    BoundaryMeasures {
        f: f.finish(),
        g: g.finish(),
        f_atom,
        g_atom,
    }
}

/// Entry and exit distributions `(f, g)` of `Ω` on `∂B_R`.
pub fn boundary_measures(c: &Coupling, radius: f64) -> (DiscreteMeasure, DiscreteMeasure) {
    let b = boundary_measures_indexed(c, radius);
    (b.f, b.g)
}

/// `λ(B_R) + f(∂B_R) − μ(B_R) − g(∂B_R)` for a plan of `λ` and `μ`.
pub fn mass_balance_defect(c: &Coupling, radius: f64) -> f64 {
    let ball = Ball::new(radius).expect("positive radius");
    let (f, g) = boundary_measures(c, radius);
    let lam = restrict(c.source(), &ball).mass();
    let mu = restrict(c.target(), &ball).mass();
    sum_exact([lam, f.mass(), -mu, -g.mass()])
}

/// Crossing statistics over `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct LocalStats {
    pub crossing_mass: f64,
    pub crossing_cost: f64,
    pub omega_cost: f64,
}

pub fn crossing_stats(c: &Coupling, radius: f64) -> LocalStats {
    let mut mass = Vec::new();
    let mut cost = Vec::new();
    let mut omega = Vec::new();
    for (k, info) in omega_entries(c, radius) {
        let e = c.entries()[k];
        let (x, y) = c.endpoints(&e);
        let w = e.mass * x.dist_sq(y);
        omega.push(w);
        if info.crosses() {
            mass.push(e.mass);
            cost.push(w);
        }
    }
    LocalStats {
        crossing_mass: sum_exact(mass),
        crossing_cost: sum_exact(cost),
        omega_cost: sum_exact(omega),
    }
}

/// Cost of the pairs with an endpoint in `B_5`.
pub fn local_energy(c: &Coupling) -> f64 {
    sum_exact(
        c.pairs()
            .filter(|&(x, y, _)| anchored(x, y, ENERGY_ANCHOR))
            .map(|(x, y, m)| m * x.dist_sq(y)),
    )
}

/// Longest displacement among pairs with an endpoint in `B_4`.
pub fn max_displacement(c: &Coupling) -> f64 {
    c.pairs()
        .filter(|&(x, y, _)| anchored(x, y, OMEGA_ANCHOR))
        .map(|(x, y, _)| x.dist(y))
        .fold(0.0, f64::max)
}

/// Radial range `[min |X|, max |X|]` of a segment.
pub fn radial_range(x: Point, y: Point) -> (f64, f64) {
    let d = y - x;
    let a = d.norm_sq();
    let t = if a == 0.0 {
        0.0
    } else {
        (-x.dot(d) / a).clamp(0.0, 1.0)
    };
    (x.lerp(y, t).norm(), x.norm().max(y.norm()))
}

/// `∫_{r0}^{r1} crossing_cost(R) dR / (r1 − r0)`, computed exactly from the
/// radial range of every `B_4`-anchored segment, together with the bound
/// `omega_cost(r1) · max_displacement`.
pub fn averaged_crossing_cost(c: &Coupling, r0: f64, r1: f64) -> (f64, f64) {
    let avg = sum_exact(c.pairs().filter(|&(x, y, _)| anchored(x, y, OMEGA_ANCHOR)).map(
        |(x, y, m)| {
            let (lo, hi) = radial_range(x, y);
            let overlap = (hi.min(r1) - lo.max(r0)).max(0.0);
            m * x.dist_sq(y) * overlap
        },
    )) / (r1 - r0);
    let bound = crossing_stats(c, r1).omega_cost * max_displacement(c);
    (avg, bound)
}

/// Trajectory integrals over `Ω` against a field `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrajectoryIntegrals {
    /// `∫_Ω ∫_σ^τ |Ẋ − ∇φ(X)|² dt dπ`.
    pub misfit: f64,
    /// `∫_Ω ∫_σ^τ |Ẋ|² dt dπ`.
    pub kinetic: f64,
    /// `∫_Ω ∫_σ^τ |∇φ(X)|² dt dπ`.
    pub field: f64,
}

pub fn trajectory_integrals<F: SmoothField>(
    c: &Coupling,
    radius: f64,
    field: &F,
    quadrature_points: usize,
) -> TrajectoryIntegrals {
    let rule = GaussLegendre::new(quadrature_points.max(1));
    let omega = omega_entries(c, radius);
    let parts: Vec<[f64; 3]> = omega
        .par_iter()
        .map(|&(k, info)| {
            let e = c.entries()[k];
            let (x, y) = c.endpoints(&e);
            let v = y - x;
            let misfit = rule.integrate(info.sigma, info.tau, |t| {
                let gr = field.gradient(x.lerp(y, t));
                (v.x - gr[0]).powi(2) + (v.y - gr[1]).powi(2)
            });
            let energy = rule.integrate(info.sigma, info.tau, |t| {
                let gr = field.gradient(x.lerp(y, t));
                gr[0] * gr[0] + gr[1] * gr[1]
            });
            let kinetic = (info.tau - info.sigma) * v.norm_sq();
            [e.mass * misfit, e.mass * kinetic, e.mass * energy]
        })
        .collect();
    TrajectoryIntegrals {
        misfit: sum_exact(parts.iter().map(|p| p[0])),
        kinetic: sum_exact(parts.iter().map(|p| p[1])),
        field: sum_exact(parts.iter().map(|p| p[2])),
    }
}

/// Absolute residual of the orthogonality identity
///
/// ```text
/// ∫_Ω∫|Ẋ − ∇φ|² = ∫_Ω∫|Ẋ|² + ∫_Ω∫|∇φ|² − 2∫_{B_R} φ d(μ − λ) − 2∫ φ d(g − f)
/// ```
///
/// for the source `λ` and target `μ` of `c`.
pub fn verify_orthogonality<F: SmoothField>(
    c: &Coupling,
    radius: f64,
    field: &F,
    quadrature_points: usize,
) -> f64 {
    let ti = trajectory_integrals(c, radius, field, quadrature_points);
    let ball = Ball::new(radius).expect("positive radius");
    let (f, g) = boundary_measures(c, radius);
    let phi = |p: Point| field.value(p);
    let interior = restrict(c.target(), &ball).integrate(phi) - restrict(c.source(), &ball).integrate(phi);
    let boundary = g.integrate(phi) - f.integrate(phi);
    let rhs = ti.kinetic + ti.field - 2.0 * interior - 2.0 * boundary;
    (ti.misfit - rhs).abs()
}
