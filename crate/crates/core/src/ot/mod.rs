//! Exact discrete quadratic optimal transport.

mod simplex;

use crate::error::{Error, Result};
use crate::measures::{Coupling, CouplingEntry, DiscreteMeasure};

/// Relative mass mismatch accepted by [`solve_quadratic`].
pub const MASS_MISMATCH_TOL: f64 = 1e-9;

/// An optimal plan together with its cost.
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub coupling: Coupling,
    pub cost: f64,
}

/// Minimizes `Σ mass·|x − y|²` over couplings of `source` and `target`.
///
/// A relative mass mismatch up to [`MASS_MISMATCH_TOL`] is absorbed by
/// rescaling the target weights before the solve; the returned coupling
/// still refers to the original measures.
pub fn solve_quadratic(source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<OtSolution> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::InvalidArgument(
            "optimal transport between empty measures".into(),
        ));
    }
    let ms = source.mass();
    let mt = target.mass();
    if (ms - mt).abs() > MASS_MISMATCH_TOL * ms {
        return Err(Error::InfeasibleInput(format!(
            "mass mismatch: source {ms} vs target {mt}"
        )));
    }
    let supply = source.weights().to_vec();
    let demand: Vec<f64> = if ms == mt {
        target.weights().to_vec()
    } else {
        let s = ms / mt;
        target.weights().iter().map(|w| w * s).collect()
    };
    let n = target.len();
    let mut cost = vec![0.0; source.len() * n];
    for (i, &x) in source.points().iter().enumerate() {
        let row = &mut cost[i * n..(i + 1) * n];
        for (c, &y) in row.iter_mut().zip(target.points()) {
            *c = x.dist_sq(y);
        }
    }
    let flows = simplex::solve_transport(&supply, &demand, &cost)?;
    let entries = flows
        .into_iter()
        .map(|f| CouplingEntry {
            source: f.source,
            target: f.target,
            mass: f.mass,
        })
        .collect();
    let coupling = Coupling::new(source.clone(), target.clone(), entries)?;
    let cost = coupling.cost();
    Ok(OtSolution { coupling, cost })
}

/// Squared Wasserstein distance `W²(source, target)`.
pub fn wasserstein2(source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<f64> {
    solve_quadratic(source, target).map(|s| s.cost)
}

/// `W²` between two equal-weight point sets on a line, by sorted matching.
/// Both inputs must already be sorted.
pub fn w2_sorted_1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = xs.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / xs.len() as f64)
}

/// Result of a pairwise monotonicity scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub monotone: bool,
    /// Smallest `(x − x')·(y − y')` over support pairs, with the entry
    /// indices attaining it; `None` when the support has fewer than two
    /// entries.
    pub worst: Option<(usize, usize, f64)>,
}

/// Checks `(x − x')·(y − y') ≥ −tol` for every pair of support entries.
pub fn check_monotone(c: &Coupling, tol: f64) -> MonotonicityReport {
    let pts: Vec<_> = c.pairs().map(|(x, y, _)| (x, y)).collect();
    let mut worst: Option<(usize, usize, f64)> = None;
    for a in 0..pts.len() {
        let (x, y) = pts[a];
        for (b, &(xp, yp)) in pts.iter().enumerate().skip(a + 1) {
            let v = (x - xp).dot(y - yp);
            if worst.is_none_or(|(_, _, w)| v < w) {
                worst = Some((a, b, v));
            }
        }
    }
    MonotonicityReport {
        monotone: worst.is_none_or(|(_, _, w)| w >= -tol),
        worst,
    }
}
