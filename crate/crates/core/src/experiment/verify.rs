//! Machine-readable pass/fail table of the identities and inequalities
//! that hold on a single instance.

use std::f64::consts::PI;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::pipeline::{run_pipeline, MollifyRule, PipelineState};
use crate::boundary_approx::TriplePlan;
use crate::error::Result;
use crate::localization::local_optimality_with_competitor;
use crate::measures::{uniform_disc, Ball, Coupling, DiscreteMeasure, Point};
use crate::ot::{check_monotone, solve_quadratic};
use crate::poisson2d::{circle_measure_coefficients, mollify, FourierBoundaryData, QuadraticField, SmoothField};
use crate::trajectories::{
    mass_balance_defect, trajectory_integrals, verify_orthogonality, DEFAULT_QUADRATURE_POINTS,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyTable {
    pub rows: Vec<VerifyRow>,
}

impl VerifyTable {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&VerifyRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Fixed-width text rendering, one row per line.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!("{:<width$}  {:<4}  {:>13}  {:>13}  note\n", "row", "ok", "value", "threshold");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:<4}  {:>13.6e}  {:>13.6e}  {}\n",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                r.value,
                r.threshold,
                r.note
            ));
        }
        out
    }

    /// Records `value ≤ threshold`.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64, note: impl Into<String>) {
        self.rows.push(VerifyRow {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            note: note.into(),
        });
    }

    /// Records `value ≥ threshold`.
    fn at_least(&mut self, name: &str, value: f64, threshold: f64, note: impl Into<String>) {
        self.rows.push(VerifyRow {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            note: note.into(),
        });
    }
}

/// Rows that only need an admissible plan: orthogonality with polynomial
/// fields, mass balance on `radii`, the kinetic bound and monotonicity.
/// The monotonicity row is expected to fail for non-optimal plans.
pub fn verify_plan(pi: &Coupling, radii: &[f64], optimal: bool) -> VerifyTable {
    let mut t = VerifyTable::default();
    let mass = pi.source().mass().max(f64::MIN_POSITIVE);
    let linear = QuadraticField::linear(0.0, 1.0, 0.0);
    let saddle = QuadraticField {
        c11: 1.0,
        c22: -1.0,
        ..Default::default()
    };
    let mut worst_lin = 0.0f64;
    let mut worst_quad = 0.0f64;
    let mut worst_balance = 0.0f64;
    let mut worst_kinetic = f64::INFINITY;
    for &r in radii {
        worst_lin = worst_lin.max(verify_orthogonality(pi, r, &linear, DEFAULT_QUADRATURE_POINTS) / mass);
        worst_quad = worst_quad.max(verify_orthogonality(pi, r, &saddle, DEFAULT_QUADRATURE_POINTS) / mass);
        worst_balance = worst_balance.max(mass_balance_defect(pi, r).abs());
        let ti = trajectory_integrals(pi, r, &linear, 1);
        let omega = crate::trajectories::crossing_stats(pi, r).omega_cost;
        worst_kinetic = worst_kinetic.min(omega - ti.kinetic);
    }
    t.at_most("orthogonality_linear", worst_lin, 1e-9, "residual per unit mass, field x1");
    t.at_most("orthogonality_quadratic", worst_quad, 1e-9, "residual per unit mass, field x1^2 - x2^2");
    t.at_most("mass_balance", worst_balance, 1e-12 * mass, "max over radius grid");
    t.at_least("kinetic_bound", worst_kinetic, -1e-12 * mass, "omega cost minus in-ball kinetic energy");
    let mono = check_monotone(pi, 1e-9);
    let note = if optimal {
        "worst pairwise (x-x').(y-y')"
    } else {
        "worst pairwise (x-x').(y-y'); may fail for a non-optimal plan"
    };
    t.at_least("monotonicity", mono.worst.map_or(0.0, |w| w.2), -1e-9, note);
    t
}

fn triple_error(t: &TriplePlan, first: &Coupling, second: &Coupling) -> f64 {
    let (a, b) = t.marginal_errors(first, second);
    a.max(b)
}

/// Atoms of a circle density at `count` equally spaced angles.
fn circle_atoms(data: &FourierBoundaryData, count: usize) -> DiscreteMeasure {
    let radius = data.radius();
    let ds = 2.0 * PI * radius / count as f64;
    let atoms = (0..count).map(|k| {
        let theta = 2.0 * PI * (k as f64 + 0.5) / count as f64;
        (Point::from_polar(radius, theta), data.density(theta).max(0.0) * ds)
    });
    DiscreteMeasure::from_atoms(atoms).expect("finite nonnegative circle weights")
}

/// Full suite on the optimal plan of `(λ, μ)` and the pipeline's `φ^r`.
pub fn verify_identities(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
    config: &ExperimentConfig,
) -> Result<VerifyTable> {
    let state = run_pipeline(lambda, mu, config, MollifyRule::Fixed)?;
    verify_state(&state, config)
}

pub fn verify_state(state: &PipelineState, config: &ExperimentConfig) -> Result<VerifyTable> {
    let pi = &state.pi;
    let rep = &state.report;
    let radius = rep.r_selected;
    let mut t = verify_plan(pi, &config.radius_grid(), true);
    let mass = pi.source().mass();

    // orthogonality against the series solution; 16-node quadrature is not
    // exact here, so the tolerance is relative
    let ti = trajectory_integrals(pi, radius, &state.phi, DEFAULT_QUADRATURE_POINTS);
    let scale = ti.kinetic + ti.field;
    t.at_most(
        "orthogonality_phi",
        verify_orthogonality(pi, radius, &state.phi, DEFAULT_QUADRATURE_POINTS),
        1e-8 * scale + 1e-14 * mass,
        "residual with the mollified Neumann solution",
    );

    // the four decomposition terms bound the in-ball misfit
    let rhs = rep.term_as28 + 2.0 * rep.term_as32 + 2.0 * rep.term_as30 + rep.term_as35;
    let scale = rep.omega_cost + rep.energy_phi;
    t.at_least(
        "decomposition_bound",
        rhs - rep.misfit,
        -1e-6 * scale,
        "term_as28 + 2 term_as32 + 2 term_as30 + term_as35 minus misfit",
    );

    // ∫|∇φ|² = ∫_{∂B_R} φ ∂_r φ (the interior term vanishes since ∫φ = 0)
    let n = 4096;
    let mut boundary = 0.0;
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        let p = Point::from_polar(radius, theta);
        let g = state.phi.gradient(p);
        let dr = (g[0] * p.x + g[1] * p.y) / radius;
        boundary += state.phi.value(p) * dr;
    }
    boundary *= 2.0 * PI * radius / n as f64;
    let energy = rep.energy_phi;
    t.at_most(
        "integration_by_parts",
        (energy - boundary).abs(),
        1e-6 * energy.max(1e-300),
        "Parseval energy vs boundary quadrature",
    );

    // localized optimality and the glued competitor
    let (lo, glued) = local_optimality_with_competitor(pi, radius)?;
    t.at_least("local_optimality", lo.slack, -1e-9, "W_local + sqrt(2 crossing) - sqrt(omega cost)");
    if let Some(g) = glued {
        t.at_most("glued_admissible", g.coupling.marginal_error(), 1e-12, "per-atom marginal error");
        t.at_least(
            "glued_cost",
            g.coupling.cost() - pi.cost(),
            -1e-9 * pi.cost().max(1.0),
            "cost of the competitor minus cost of the plan",
        );
        t.at_least(
            "glued_chain",
            g.local_norm() - lo.lhs,
            -1e-9,
            "norm of the rerouted pieces minus sqrt(omega cost)",
        );
    }

    // boundary-data approximation on the whole grid
    let worst_g = rep
        .radius_table
        .iter()
        .map(|r| r.approx.w2_g_gbar - r.approx.bound_ao97)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_f = rep
        .radius_table
        .iter()
        .map(|r| r.approx.w2_f_fbar - r.approx.bound_ao97)
        .fold(f64::NEG_INFINITY, f64::max);
    t.at_most("approx_w2_g", worst_g, 1e-9, "max over grid of W2(g, gbar) - 8(crossing + D)");
    t.at_most("approx_w2_f", worst_f, 1e-9, "max over grid of W2(f, fbar) - 8(crossing + D)");
    let ratio = rep
        .radius_table
        .iter()
        .map(|r| r.approx.projection_ratio)
        .fold(0.0, f64::max);
    t.at_most("projection_ratio", ratio, 2.0 + 1e-9, "radial projection distance ratio");
    let aux = &state.aux;
    let triple = triple_error(&aux.triple_g, pi, &aux.pibar_mu)
        .max(triple_error(&aux.triple_f, &pi.reversed(), &aux.pibar_lambda));
    t.at_most("triple_marginals", triple, 1e-12, "composed plan marginals");
    t.at_least(
        "endpoints_in_b5",
        (rep.flags.as22 && rep.flags.sources_in_b5) as u8 as f64,
        1.0,
        "every trajectory of the localized set ends and starts in B_5",
    );
    t.at_least("compatibility", rep.flags.compatibility_ok as u8 as f64, 1.0, "boundary flux balances the source");

    // Benamou-Brenier bound in the regularized setting
    let (w, bound, slack) = regularized_transport_check(state, config)?;
    t.at_most(
        "benamou_brenier",
        w.sqrt() - bound.sqrt(),
        slack,
        format!("sqrt W2 - sqrt(energy / min kappa); W2 = {w:.6e}, bound = {bound:.6e}"),
    );
    Ok(t)
}

/// `(W², energy_phi / min κ, slack)` for the regularized pair
/// `(κ_λ dx⌞B_R + f̄_r, κ_μ dx⌞B_R + ḡ_r)`, with interior densities on the
/// `grid_h` lattice and circle densities on matching arc spacing. The slack
/// is the in-cell displacement bound of both discretizations in `W` units.
pub fn regularized_transport_check(
    state: &PipelineState,
    config: &ExperimentConfig,
) -> Result<(f64, f64, f64)> {
    let rep = &state.report;
    let radius = rep.r_selected;
    let h = config.grid_h;
    let ball = Ball::new(radius)?;
    let count = ((2.0 * PI * radius / h).round() as usize).max(8);
    let circle = |m: &DiscreteMeasure| -> Result<DiscreteMeasure> {
        let data = circle_measure_coefficients(m, radius, config.fourier_n)?;
        Ok(circle_atoms(&mollify(&data, state.params.mollify_r)?, count))
    };
    let lam_mass = rep.kappa_lambda_r * ball.area();
    let mu_mass = rep.kappa_mu_r * ball.area();
    let side = |mass: f64, b: DiscreteMeasure| -> Result<DiscreteMeasure> {
        let interior = if mass > 0.0 {
            uniform_disc(&ball, h, mass)?
        } else {
            DiscreteMeasure::empty()
        };
        Ok(interior.concat(&b))
    };
    let source = side(lam_mass, circle(&state.fbar)?)?;
    let target = side(mu_mass, circle(&state.gbar)?)?;
    let target = target.scaled(source.mass() / target.mass());
    let w2 = solve_quadratic(&source, &target)?.cost;
    let bound = rep.energy_phi / rep.kappa_lambda_r.min(rep.kappa_mu_r);
    let cell = h * h / 2.0;
    let slack = (cell * source.mass()).sqrt() + (cell * target.mass()).sqrt();
    Ok((w2, bound, slack))
}
