//! Data terms, the localized transport problem on `B̄_R` and the glued
//! competitor.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{
    restrict_indexed, sum_exact, uniform_disc, Ball, Coupling, CouplingEntry, DiscreteMeasure, Point,
};
use crate::ot::{solve_quadratic, wasserstein2};
use crate::trajectories::{boundary_measures_indexed, crossing_stats, BoundaryMeasures};

/// Radius on which the data term is measured.
pub const DATA_RADIUS: f64 = 5.0;
/// Tolerance on the marginals of the local plan handed to the glue.
pub const LOCAL_PLAN_TOL: f64 = 1e-9;

/// `m(B_R) / (πR²)`.
pub fn kappa(m: &DiscreteMeasure, radius: f64) -> f64 {
    match Ball::new(radius) {
        Ok(b) => m.mass_in(&b) / (PI * radius * radius),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataTermReport {
    pub kappa_lambda: f64,
    pub kappa_mu: f64,
    pub w2_lambda: f64,
    pub w2_mu: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub discretization_bound: f64,
}

/// Data term on `B_5`: distance of each measure to its uniform projection
/// plus the squared density deviations.
pub fn data_term(lambda: &DiscreteMeasure, mu: &DiscreteMeasure, h: f64) -> Result<DataTermReport> {
    data_term_on(lambda, mu, DATA_RADIUS, h)
}

/// [`data_term`] with `B_5` replaced by `B_R`.
pub fn restricted_data_term(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    radius: f64,
    h: f64,
) -> Result<DataTermReport> {
    data_term_on(lambda, mu, radius, h)
}

fn data_term_on(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    radius: f64,
    h: f64,
) -> Result<DataTermReport> {
    let ball = Ball::new(radius)?;
    let one = |m: &DiscreteMeasure, name: &str| -> Result<(f64, f64, f64)> {
        let (local, _) = restrict_indexed(m, &ball);
        let local = canonical_order(&local);
        if local.is_empty() {
            return Err(Error::DegenerateInput(format!(
                "{name} has no mass in the ball of radius {radius}"
            )));
        }
        let uniform = uniform_disc(&ball, h, local.mass())?;
        let w2 = wasserstein2(&local, &uniform)?;
        Ok((local.mass() / ball.area(), w2, local.mass()))
    };
    let (kappa_lambda, w2_lambda, mass_lambda) = one(lambda, "source")?;
    let (kappa_mu, w2_mu, mass_mu) = one(mu, "target")?;
    let d = w2_lambda + (kappa_lambda - 1.0).powi(2) + w2_mu + (kappa_mu - 1.0).powi(2);
    // each atom moves at most half a cell diagonal
    let cell = (h * std::f64::consts::SQRT_2 / 2.0).powi(2);
    Ok(DataTermReport {
        kappa_lambda,
        kappa_mu,
        w2_lambda,
        w2_mu,
        d,
        discretization_bound: cell * (mass_lambda + mass_mu),
    })
}

/// Atoms sorted by coordinates then weight, so that the solve does not
/// depend on the input order.
fn canonical_order(m: &DiscreteMeasure) -> DiscreteMeasure {
    let mut atoms: Vec<(Point, f64)> = m.atoms().collect();
    atoms.sort_by(|a, b| {
        a.0.x
            .total_cmp(&b.0.x)
            .then(a.0.y.total_cmp(&b.0.y))
            .then(a.1.total_cmp(&b.1))
    });
    DiscreteMeasure::from_atoms(atoms).expect("atoms of a valid measure")
}

/// Where an atom of the local problem comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalAtom {
    /// Atom of the original measure, by index.
    Interior(usize),
    /// Atom of a boundary measure, by index.
    Boundary(usize),
}

/// The pair `(λ⌞B_R + f, μ⌞B_R + g)` with interior atoms first, in index
/// order, followed by boundary atoms.
#[derive(Debug, Clone)]
pub struct LocalPair {
    pub radius: f64,
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    pub source_atoms: Vec<LocalAtom>,
    pub target_atoms: Vec<LocalAtom>,
    pub boundary: BoundaryMeasures,
}

pub fn local_pair(pi: &Coupling, radius: f64) -> Result<LocalPair> {
    let ball = Ball::new(radius)?;
    let boundary = boundary_measures_indexed(pi, radius);
    let build = |m: &DiscreteMeasure, b: &DiscreteMeasure| {
        let (interior, index) = restrict_indexed(m, &ball);
        let atoms = index
            .into_iter()
            .map(LocalAtom::Interior)
            .chain((0..b.len()).map(LocalAtom::Boundary))
            .collect::<Vec<_>>();
        (interior.concat(b), atoms)
    };
    let (source, source_atoms) = build(pi.source(), &boundary.f);
    let (target, target_atoms) = build(pi.target(), &boundary.g);
    Ok(LocalPair {
        radius,
        source,
        target,
        source_atoms,
        target_atoms,
        boundary,
    })
}

/// Conditional distributions of plan entries given a boundary atom.
fn disintegrate(atom_of: &[Option<usize>], n_atoms: usize, pi: &Coupling) -> Vec<Vec<(usize, f64)>> {
    let mut out = vec![Vec::new(); n_atoms];
    for (k, a) in atom_of.iter().enumerate() {
        if let Some(z) = a {
            out[*z].push((k, pi.entries()[k].mass));
        }
    }
    out
}

/// The glued plan with the cost of each of its five pieces.
#[derive(Debug, Clone)]
pub struct GluedCompetitor {
    pub coupling: Coupling,
    /// Costs of: `π` off `Ω`; interior to interior; boundary to interior;
    /// interior to boundary; boundary to boundary.
    pub piece_costs: [f64; 5],
}

impl GluedCompetitor {
    /// `‖(f₂, f₃, f₄, f₅)‖`, the root of the cost of the last four pieces.
    pub fn local_norm(&self) -> f64 {
        sum_exact(self.piece_costs[1..].iter().copied()).sqrt()
    }
}

/// Competitor that keeps `π` off `Ω` and reroutes `Ω` through `π̄`, a plan
/// of [`local_pair`]`(π, R)`.
pub fn glue_competitor(pi: &Coupling, pibar: &Coupling, radius: f64) -> Result<Coupling> {
    glue_competitor_detailed(pi, pibar, radius).map(|g| g.coupling)
}

pub fn glue_competitor_detailed(
    pi: &Coupling,
    pibar: &Coupling,
    radius: f64,
) -> Result<GluedCompetitor> {
    let local = local_pair(pi, radius)?;
    glue_with(pi, pibar, &local)
}

fn glue_with(pi: &Coupling, pibar: &Coupling, local: &LocalPair) -> Result<GluedCompetitor> {
    if pibar.source().points() != local.source.points()
        || pibar.target().points() != local.target.points()
    {
        return Err(Error::InfeasibleInput(
            "local plan is not defined on the localized pair".into(),
        ));
    }
    let (rows, cols) = pibar.marginal_weights();
    let row_err = rows
        .iter()
        .zip(local.source.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let col_err = cols
        .iter()
        .zip(local.target.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = local.source.mass().max(1.0);
    if row_err.max(col_err) > LOCAL_PLAN_TOL * scale {
        return Err(Error::InfeasibleInput(format!(
            "local plan marginals deviate by {:e}",
            row_err.max(col_err)
        )));
    }

    let bm = &local.boundary;
    let lam_z = disintegrate(&bm.f_atom, bm.f.len(), pi);
    let mu_w = disintegrate(&bm.g_atom, bm.g.len(), pi);
    let in_omega: Vec<bool> = {
        let mut v = vec![false; pi.len()];
        for (k, _) in crate::trajectories::omega_entries(pi, local.radius) {
            v[k] = true;
        }
        v
    };

    let mut acc: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut piece = [const { Vec::<f64>::new() }; 5];
    let lam = pi.source();
    let mu = pi.target();
    let mut push = |i: usize, j: usize, m: f64, which: usize, acc: &mut BTreeMap<_, Vec<f64>>| {
        if m > 0.0 {
            acc.entry((i, j)).or_default().push(m);
            piece[which].push(m * lam.point(i).dist_sq(mu.point(j)));
        }
    };

    for (k, e) in pi.entries().iter().enumerate() {
        if !in_omega[k] {
            push(e.source, e.target, e.mass, 0, &mut acc);
        }
    }
    for e in pibar.entries() {
        match (local.source_atoms[e.source], local.target_atoms[e.target]) {
            (LocalAtom::Interior(i), LocalAtom::Interior(j)) => push(i, j, e.mass, 1, &mut acc),
            (LocalAtom::Boundary(z), LocalAtom::Interior(j)) => {
                let fz = bm.f.weight(z);
                for &(k, m) in &lam_z[z] {
                    push(pi.entries()[k].source, j, e.mass * m / fz, 2, &mut acc);
                }
            }
            (LocalAtom::Interior(i), LocalAtom::Boundary(w)) => {
                let gw = bm.g.weight(w);
                for &(k, m) in &mu_w[w] {
                    push(i, pi.entries()[k].target, e.mass * m / gw, 3, &mut acc);
                }
            }
            (LocalAtom::Boundary(z), LocalAtom::Boundary(w)) => {
                let fz = bm.f.weight(z);
                let gw = bm.g.weight(w);
                for &(k, m) in &lam_z[z] {
                    for &(kk, mm) in &mu_w[w] {
                        let mass = e.mass * (m / fz) * (mm / gw);
                        push(pi.entries()[k].source, pi.entries()[kk].target, mass, 4, &mut acc);
                    }
                }
            }
        }
    }
    let entries = acc
        .into_iter()
        .map(|((source, target), ms)| CouplingEntry {
            source,
            target,
            mass: sum_exact(ms),
        })
        .collect();
    let coupling = Coupling::new(lam.clone(), mu.clone(), entries)?;
    let piece_costs = piece.map(sum_exact);
    Ok(GluedCompetitor {
        coupling,
        piece_costs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalOptimalityReport {
    pub lhs: f64,
    pub w_local: f64,
    pub crossing_term: f64,
    pub slack: f64,
}

/// Terms of `√(∫_Ω|x−y|²dπ) ≤ W(λ⌞B_R+f, μ⌞B_R+g) + √(2·crossing cost)`.
pub fn local_optimality_gap(pi: &Coupling, radius: f64) -> Result<LocalOptimalityReport> {
    let (report, _) = local_optimality_with_competitor(pi, radius)?;
    Ok(report)
}

/// [`local_optimality_gap`] together with the glued competitor built from
/// the optimal local plan.
pub fn local_optimality_with_competitor(
    pi: &Coupling,
    radius: f64,
) -> Result<(LocalOptimalityReport, Option<GluedCompetitor>)> {
    let stats = crossing_stats(pi, radius);
    let local = local_pair(pi, radius)?;
    let (w2, glued) = if local.source.is_empty() && local.target.is_empty() {
        (0.0, None)
    } else {
        let sol = solve_quadratic(&local.source, &local.target)?;
        let glued = glue_with(pi, &sol.coupling, &local)?;
        (sol.cost, Some(glued))
    };
    let lhs = stats.omega_cost.sqrt();
    let w_local = w2.sqrt();
    let crossing_term = (2.0 * stats.crossing_cost).sqrt();
    Ok((
        LocalOptimalityReport {
            lhs,
            w_local,
            crossing_term,
            slack: w_local + crossing_term - lhs,
        },
        glued,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Point;

    #[test]
    fn kappa_examples() {
        let ball = Ball::new(5.0).unwrap();
        let u = uniform_disc(&ball, 0.5, 25.0 * PI).unwrap();
        assert!((kappa(&u, 5.0) - 1.0).abs() < 1e-14);
        assert_eq!(kappa(&DiscreteMeasure::empty(), 2.0), 0.0);
        let m = DiscreteMeasure::uniform_weights(vec![Point::ORIGIN], 2.0 * PI).unwrap();
        assert!((kappa(&m, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn data_term_of_uniform_pair_vanishes() {
        let ball = Ball::new(5.0).unwrap();
        let u = uniform_disc(&ball, 0.5, 25.0 * PI).unwrap();
        let r = data_term(&u, &u, 0.5).unwrap();
        assert_eq!(r.w2_lambda, 0.0);
        assert!(r.d < 1e-20, "{}", r.d);
    }

    #[test]
    fn doubled_density() {
        let ball = Ball::new(5.0).unwrap();
        let u = uniform_disc(&ball, 0.5, 25.0 * PI).unwrap();
        let r = data_term(&u.scaled(2.0), &u, 0.5).unwrap();
        assert!((r.kappa_lambda - 2.0).abs() < 1e-12);
        assert!(r.d >= 1.0 - 1e-12);
    }

    #[test]
    fn empty_restriction_is_degenerate() {
        let far = DiscreteMeasure::uniform_weights(vec![Point::new(7.0, 0.0)], 1.0).unwrap();
        assert!(matches!(data_term(&far, &far, 0.5), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn glue_without_omega() {
        let a = DiscreteMeasure::uniform_weights(vec![Point::new(6.0, 0.0), Point::new(0.0, 7.0)], 1.0)
            .unwrap();
        let b = DiscreteMeasure::uniform_weights(vec![Point::new(6.5, 0.0), Point::new(0.0, 7.5)], 1.0)
            .unwrap();
        let pi = solve_quadratic(&a, &b).unwrap().coupling;
        let (rep, glued) = local_optimality_with_competitor(&pi, 2.0).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(glued.is_none());
    }
}
