//! Regularized boundary data: composition of a plan with the projection of
//! its target onto the uniform density, the far endpoint distribution `g'`
//! and its radial projection `ḡ` onto the circle.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::localization::{data_term, DataTermReport, DATA_RADIUS};
use crate::measures::{
    restrict_indexed, sum_exact, uniform_disc, Ball, Coupling, CouplingEntry, DiscreteMeasure,
    Point,
};
use crate::ot::{solve_quadratic, wasserstein2};
use crate::poisson2d::{circle_measure_coefficients, mollify};
use crate::trajectories::{boundary_measures, crossing_stats, omega_info, CircleAtoms};

/// Pairs with `|X(τ) − z|` below this are skipped by the projection check.
pub const PROJECTION_SKIP: f64 = 1e-12;

/// One atom of the composed plan on `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleEntry {
    pub x: Point,
    pub y: Point,
    pub z: Point,
    pub mass: f64,
    /// Index of the first-leg entry in the first plan.
    pub first: usize,
    /// Index of the second-leg entry in the second plan.
    pub second: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TriplePlan {
    pub entries: Vec<TripleEntry>,
}

impl TriplePlan {
    /// Largest per-entry deviation of the `(x, y)` and `(y, z)` marginals
    /// from the entries of `first` and `second`.
    pub fn marginal_errors(&self, first: &Coupling, second: &Coupling) -> (f64, f64) {
        let mut a = vec![Vec::new(); first.len()];
        let mut b = vec![Vec::new(); second.len()];
        for t in &self.entries {
            a[t.first].push(t.mass);
            b[t.second].push(t.mass);
        }
        let err = |acc: Vec<Vec<f64>>, c: &Coupling| {
            acc.into_iter()
                .zip(c.entries())
                .map(|(v, e)| (sum_exact(v) - e.mass).abs())
                .fold(0.0, f64::max)
        };
        (err(a, first), err(b, second))
    }
}

/// Glues `π` (on `(x, y)`) and `π̄` (on `(y, z)`) along their common
/// measure by conditioning `π̄` on `y`.
pub fn compose_triple(pi: &Coupling, pibar: &Coupling) -> Result<TriplePlan> {
    let mid = pi.target();
    if mid.points() != pibar.source().points() || mid.weights() != pibar.source().weights() {
        return Err(Error::InfeasibleInput(
            "the two plans do not share their middle measure".into(),
        ));
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); mid.len()];
    for (k, e) in pibar.entries().iter().enumerate() {
        rows[e.source].push(k);
    }
    let row_mass: Vec<f64> = rows
        .iter()
        .map(|r| sum_exact(r.iter().map(|&k| pibar.entries()[k].mass)))
        .collect();
    let mut entries = Vec::new();
    for (k, e) in pi.entries().iter().enumerate() {
        let (x, y) = pi.endpoints(e);
        let total = row_mass[e.target];
        if total <= 0.0 {
            return Err(Error::InfeasibleInput(format!(
                "second plan has no mass on middle atom {}",
                e.target
            )));
        }
        for &kk in &rows[e.target] {
            let s = pibar.entries()[kk];
            entries.push(TripleEntry {
                x,
                y,
                z: pibar.target().point(s.target),
                mass: e.mass * s.mass / total,
                first: k,
                second: kk,
            });
        }
    }
    Ok(TriplePlan { entries })
}

/// The projection plan of `m⌞B_5` onto the uniform density of the same
/// mass, extended by the identity outside `B_5`.
pub fn projection_plan(m: &DiscreteMeasure, h: f64) -> Result<Coupling> {
    let ball = Ball::new(DATA_RADIUS)?;
    let (inside, index) = restrict_indexed(m, &ball);
    let mut inside_of = vec![None; m.len()];
    for (k, &i) in index.iter().enumerate() {
        inside_of[i] = Some(k);
    }
    let mut z_points = Vec::new();
    let mut z_weights = Vec::new();
    let mut entries = Vec::new();
    if !inside.is_empty() {
        let uniform = uniform_disc(&ball, h, inside.mass())?;
        let sol = solve_quadratic(&inside, &uniform)?;
        z_points.extend_from_slice(uniform.points());
        z_weights.extend_from_slice(uniform.weights());
        for e in sol.coupling.entries() {
            entries.push(CouplingEntry {
                source: index[e.source],
                target: e.target,
                mass: e.mass,
            });
        }
    }
    for (i, (p, w)) in m.atoms().enumerate() {
        if inside_of[i].is_none() {
            entries.push(CouplingEntry {
                source: i,
                target: z_points.len(),
                mass: w,
            });
            z_points.push(p);
            z_weights.push(w);
        }
    }
    entries.sort_by_key(|e| (e.source, e.target));
    Coupling::new(m.clone(), DiscreteMeasure::new(z_points, z_weights)?, entries)
}

/// `ḡ` and `g'` for the exit side of the first leg.
#[derive(Debug, Clone)]
pub struct ProjectedBoundary {
    pub gbar: DiscreteMeasure,
    pub gprime: DiscreteMeasure,
    /// Copy of the plan `g → ḡ` as `(X(τ), R z/|z|, mass)` triples.
    pub transport: Vec<(Point, Point, f64)>,
}

fn exiting(t: &TriplePlan, radius: f64) -> impl Iterator<Item = (Point, &TripleEntry)> {
    t.entries.iter().filter_map(move |e| {
        omega_info(e.x, e.y, radius)
            .filter(|i| i.exit_on_boundary)
            .map(|i| (i.exit_point, e))
    })
}

pub fn build_gbar_detailed(t: &TriplePlan, radius: f64) -> Result<ProjectedBoundary> {
    let mut gbar = CircleAtoms::default();
    let mut prime_index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut prime_points = Vec::new();
    let mut prime_weights: Vec<Vec<f64>> = Vec::new();
    let mut transport = Vec::new();
    for (exit, e) in exiting(t, radius) {
        let r = e.z.norm();
        if r == 0.0 {
            return Err(Error::DegenerateProjection(
                "endpoint at the origin cannot be projected radially".into(),
            ));
        }
        let proj = (radius / r) * e.z;
        gbar.add(proj, e.mass);
        let key = (e.z.x.to_bits(), e.z.y.to_bits());
        let next = prime_points.len();
        let k = *prime_index.entry(key).or_insert(next);
        if k == next {
            prime_points.push(e.z);
            prime_weights.push(Vec::new());
        }
        prime_weights[k].push(e.mass);
        transport.push((exit, proj, e.mass));
    }
    let gprime = DiscreteMeasure::new(
        prime_points,
        prime_weights.into_iter().map(sum_exact).collect(),
    )?;
    Ok(ProjectedBoundary {
        gbar: gbar.finish(),
        gprime,
        transport,
    })
}

/// `(ḡ, g')` on the circle of radius `radius`.
pub fn build_gbar(t: &TriplePlan, radius: f64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    build_gbar_detailed(t, radius).map(|p| (p.gbar, p.gprime))
}

/// Worst `|X(τ) − R z/|z|| / |X(τ) − z|` over exiting first legs.
pub fn projection_distance_check(t: &TriplePlan, radius: f64) -> f64 {
    exiting(t, radius)
        .filter_map(|(exit, e)| projection_ratio(exit, e.z, radius))
        .fold(0.0, f64::max)
}

/// `|p − R z/|z|| / |p − z|` for `p` on the circle; `None` when `z` is at
/// the origin or within [`PROJECTION_SKIP`] of `p`.
pub fn projection_ratio(p: Point, z: Point, radius: f64) -> Option<f64> {
    let d = p.dist(z);
    let r = z.norm();
    if d <= PROJECTION_SKIP || r == 0.0 {
        return None;
    }
    Some(p.dist((radius / r) * z) / d)
}

/// `Σ g'(z)·||z| − R|`.
pub fn radial_concentration(gprime: &DiscreteMeasure, radius: f64) -> f64 {
    sum_exact(gprime.atoms().map(|(z, w)| w * (z.norm() - radius).abs()))
}

/// Parameters for the boundary-data quality report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub h: f64,
    pub fourier_n: usize,
    pub mollify_r: f64,
}

/// Everything that does not depend on the radius: the projection plans of
/// both measures, the composed triples for `g` and the mirrored triples
/// for `f`, and the data term.
#[derive(Debug, Clone)]
pub struct AuxiliaryPlans {
    pub pibar_mu: Coupling,
    pub pibar_lambda: Coupling,
    pub triple_g: TriplePlan,
    pub triple_f: TriplePlan,
    pub data: DataTermReport,
    pub energy: f64,
}

impl AuxiliaryPlans {
    pub fn new(pi: &Coupling, h: f64) -> Result<Self> {
        let pibar_mu = projection_plan(pi.target(), h)?;
        let pibar_lambda = projection_plan(pi.source(), h)?;
        let triple_g = compose_triple(pi, &pibar_mu)?;
        let triple_f = compose_triple(&pi.reversed(), &pibar_lambda)?;
        let data = data_term(pi.source(), pi.target(), h)?;
        let energy = crate::trajectories::local_energy(pi);
        Ok(AuxiliaryPlans {
            pibar_mu,
            pibar_lambda,
            triple_g,
            triple_f,
            data,
            energy,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxReport {
    pub radius: f64,
    pub w2_g_gbar: f64,
    pub w2_f_fbar: f64,
    pub bound_ao97: f64,
    pub l2_density_proxy: f64,
    pub l2_density_proxy_f: f64,
    pub bound_ao96: f64,
    pub radial_concentration: f64,
    pub radial_concentration_f: f64,
    pub projection_ratio: f64,
    pub gbar_mass: f64,
    pub fbar_mass: f64,
}

/// Regularized boundary measures at one radius.
#[derive(Debug, Clone)]
pub struct RegularizedBoundary {
    pub f: DiscreteMeasure,
    pub g: DiscreteMeasure,
    pub fbar: ProjectedBoundary,
    pub gbar: ProjectedBoundary,
}

pub fn regularized_boundary(pi: &Coupling, aux: &AuxiliaryPlans, radius: f64) -> Result<RegularizedBoundary> {
    let (f, g) = boundary_measures(pi, radius);
    Ok(RegularizedBoundary {
        f,
        g,
        fbar: build_gbar_detailed(&aux.triple_f, radius)?,
        gbar: build_gbar_detailed(&aux.triple_g, radius)?,
    })
}

/// `∫_{∂B_R} ρ²` of the mollified circle density of `m`.
pub fn mollified_l2(m: &DiscreteMeasure, radius: f64, params: &ApproxParams) -> Result<f64> {
    let data = circle_measure_coefficients(m, radius, params.fourier_n)?;
    Ok(mollify(&data, params.mollify_r)?.l2_norm_sq())
}

/// Boundary-data quality at one radius, reusing radius-independent plans.
pub fn approx_quality_with(
    pi: &Coupling,
    aux: &AuxiliaryPlans,
    radius: f64,
    params: &ApproxParams,
) -> Result<ApproxReport> {
    let rb = regularized_boundary(pi, aux, radius)?;
    let w2 = |a: &DiscreteMeasure, b: &DiscreteMeasure| -> Result<f64> {
        if a.is_empty() && b.is_empty() {
            Ok(0.0)
        } else {
            wasserstein2(a, b)
        }
    };
    let stats = crossing_stats(pi, radius);
    let kappa_mu = aux.data.kappa_mu;
    Ok(ApproxReport {
        radius,
        w2_g_gbar: w2(&rb.g, &rb.gbar.gbar)?,
        w2_f_fbar: w2(&rb.f, &rb.fbar.gbar)?,
        bound_ao97: 8.0 * (stats.crossing_cost + aux.data.d),
        l2_density_proxy: mollified_l2(&rb.gbar.gbar, radius, params)?,
        l2_density_proxy_f: mollified_l2(&rb.fbar.gbar, radius, params)?,
        bound_ao96: 5.0 * kappa_mu * (3.0 * aux.energy + aux.data.d),
        radial_concentration: radial_concentration(&rb.gbar.gprime, radius),
        radial_concentration_f: radial_concentration(&rb.fbar.gprime, radius),
        projection_ratio: projection_distance_check(&aux.triple_g, radius)
            .max(projection_distance_check(&aux.triple_f, radius)),
        gbar_mass: rb.gbar.gbar.mass(),
        fbar_mass: rb.fbar.gbar.mass(),
    })
}

pub fn approx_quality(pi: &Coupling, radius: f64, params: &ApproxParams) -> Result<ApproxReport> {
    let aux = AuxiliaryPlans::new(pi, params.h)?;
    approx_quality_with(pi, &aux, radius, params)
}

/// Minimum of `∫|r − R| g̃(r) dr` over `0 ≤ g̃ ≤ sup_bound` with
/// `∫ g̃ = m`, attained by `sup_bound` times the indicator of an interval of
/// length `m / sup_bound` centered at `R`: `m² / (4·sup_bound)`.
pub fn rearrangement_oracle(m: f64, sup_bound: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    m * m / (4.0 * sup_bound)
}

/// Exhaustive minimum of `∫|r| g̃ dr` over piecewise-constant profiles on
/// `cells` equal cells spanning `[−half_width, half_width]`, with values in
/// `levels` and total mass within `mass_tol` of `m`. Returns `None` if no
/// profile has the requested mass.
pub fn rearrangement_brute_force(
    m: f64,
    levels: &[f64],
    cells: usize,
    half_width: f64,
    mass_tol: f64,
) -> Option<f64> {
    let width = 2.0 * half_width / cells as f64;
    // ∫_cell |r| dr, exact on each cell
    let moment: Vec<f64> = (0..cells)
        .map(|k| {
            let a = -half_width + k as f64 * width;
            let b = a + width;
            let prim = |r: f64| 0.5 * r * r.abs();
            prim(b) - prim(a)
        })
        .collect();
    let total = levels.len().pow(cells as u32);
    let mut best: Option<f64> = None;
    let mut digits = vec![0usize; cells];
    for _ in 0..total {
        let mass: f64 = digits.iter().map(|&d| levels[d] * width).sum();
        if (mass - m).abs() <= mass_tol {
            let value: f64 = digits.iter().zip(&moment).map(|(&d, mo)| levels[d] * mo).sum();
            best = Some(best.map_or(value, |b: f64| b.min(value)));
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < levels.len() {
                break;
            }
            *d = 0;
        }
    }
    best
}
