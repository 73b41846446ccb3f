//! Spectral Neumann–Poisson solver on a centered disk.
//!
//! Solves `−Δφ = c` in `B_R` with `∂_r φ = ρ` on `∂B_R`, where the flux
//! density `ρ` (per unit arc length) is a truncated Fourier series, and
//! `∫_{B_R} φ = 0`. The solution is
//!
//! ```text
//! φ(r, θ) = −c r²/4 + Σ_n (R/n)(r/R)^n (a_n cos nθ + b_n sin nθ) + c R²/8,
//! ```
//!
//! evaluated as the real part of a complex polynomial in `w = z/R`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Point};

/// Tolerance on the distance of boundary atoms from the circle.
pub const ON_CIRCLE_TOL: f64 = 1e-9;
/// Tolerance on the mode-0 compatibility condition.
pub const COMPATIBILITY_TOL: f64 = 1e-9;
/// Slack allowed when evaluating just outside the closed disk.
pub const DOMAIN_TOL: f64 = 1e-9;

/// A scalar field with gradient and Hessian, evaluable on a closed disk.
pub trait SmoothField: Sync {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> [f64; 2];
    fn hessian(&self, p: Point) -> [[f64; 2]; 2];

    fn laplacian(&self, p: Point) -> f64 {
        let h = self.hessian(p);
        h[0][0] + h[1][1]
    }
}

/// `c0 + c1·x + c2·y + c11·x² + c12·x·y + c22·y²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadraticField {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c11: f64,
    pub c12: f64,
    pub c22: f64,
}

impl QuadraticField {
    pub fn constant(c0: f64) -> Self {
        QuadraticField {
            c0,
            ..Default::default()
        }
    }

    pub fn linear(c0: f64, c1: f64, c2: f64) -> Self {
        QuadraticField {
            c0,
            c1,
            c2,
            ..Default::default()
        }
    }
}

impl SmoothField for QuadraticField {
    fn value(&self, p: Point) -> f64 {
        self.c0
            + self.c1 * p.x
            + self.c2 * p.y
            + self.c11 * p.x * p.x
            + self.c12 * p.x * p.y
            + self.c22 * p.y * p.y
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        [
            self.c1 + 2.0 * self.c11 * p.x + self.c12 * p.y,
            self.c2 + self.c12 * p.x + 2.0 * self.c22 * p.y,
        ]
    }

    fn hessian(&self, _p: Point) -> [[f64; 2]; 2] {
        [
            [2.0 * self.c11, self.c12],
            [self.c12, 2.0 * self.c22],
        ]
    }
}

/// Truncated Fourier series of a density on the circle of radius `R`,
/// with respect to arc length.
///
/// `a[n − 1]`, `b[n − 1]` are the cosine and sine coefficients of mode `n`.
/// The mean (mode 0) is optional: flux data for [`solve_neumann`] normally
/// leaves it to the interior constant, while densities of nonnegative
/// measures carry it explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBoundaryData {
    radius: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    mean: Option<f64>,
}

impl FourierBoundaryData {
    pub fn new(radius: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if a.len() != b.len() {
            return Err(Error::InvalidArgument(format!(
                "coefficient lengths differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite Fourier coefficient".into()));
        }
        Ok(FourierBoundaryData {
            radius,
            a,
            b,
            mean: None,
        })
    }

    /// All modes zero up to order `n`.
    pub fn zero(radius: f64, n: usize) -> Result<Self> {
        Self::new(radius, vec![0.0; n], vec![0.0; n])
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = Some(mean);
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.b
    }

    pub fn mean(&self) -> Option<f64> {
        self.mean
    }

    /// Density value at angle `theta`, including the mean if present.
    pub fn density(&self, theta: f64) -> f64 {
        let step = Complex64::from_polar(1.0, theta);
        let mut e = Complex64::new(1.0, 0.0);
        let mut s = self.mean.unwrap_or(0.0);
        for (a, b) in self.a.iter().zip(&self.b) {
            e *= step;
            s += a * e.re + b * e.im;
        }
        s
    }

    /// `∫_{∂B_R} ρ² ds` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        let m = self.mean.unwrap_or(0.0);
        let modes: f64 = self.a.iter().chain(&self.b).map(|v| v * v).sum();
        2.0 * PI * self.radius * m * m + PI * self.radius * modes
    }

    /// `a − b` modewise; means subtract when both are present.
    pub fn difference(&self, other: &FourierBoundaryData) -> Result<Self> {
        if self.radius != other.radius || self.order() != other.order() {
            return Err(Error::InvalidArgument(
                "boundary data on different circles or orders".into(),
            ));
        }
        let a = self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect();
        let b = self.b.iter().zip(&other.b).map(|(x, y)| x - y).collect();
        let mut d = Self::new(self.radius, a, b)?;
        if let (Some(p), Some(q)) = (self.mean, other.mean) {
            d.mean = Some(p - q);
        }
        Ok(d)
    }
}

/// Fourier coefficients of the signed circle measure `g − f`, divided by
/// `πR` so that they describe a density per unit arc length. The recorded
/// mean `(g − f)(∂B_R)/(2πR)` must equal `−cR/2`.
pub fn boundary_data_from_measures(
    g: &DiscreteMeasure,
    f: &DiscreteMeasure,
    radius: f64,
    order: usize,
    c: f64,
) -> Result<FourierBoundaryData> {
    let data = circle_measure_coefficients(g, radius, order)?
        .difference(&circle_measure_coefficients(f, radius, order)?)?;
    let mean = data.mean.unwrap_or(0.0);
    if (mean + c * radius / 2.0).abs() > COMPATIBILITY_TOL {
        return Err(Error::InfeasibleInput(format!(
            "boundary flux mean {mean:e} does not balance interior source {c:e} (expected {:e})",
            -c * radius / 2.0
        )));
    }
    Ok(data)
}

/// Fourier coefficients (and mean) of a nonnegative measure supported on
/// the circle of radius `radius`.
pub fn circle_measure_coefficients(
    m: &DiscreteMeasure,
    radius: f64,
    order: usize,
) -> Result<FourierBoundaryData> {
    let mut a = vec![0.0; order];
    let mut b = vec![0.0; order];
    for (p, w) in m.atoms() {
        let r = p.norm();
        if (r - radius).abs() > ON_CIRCLE_TOL {
            return Err(Error::InvalidInput(format!(
                "atom at radius {r} is not on the circle of radius {radius}"
            )));
        }
        let step = Complex64::new(p.x / r, p.y / r);
        let mut e = Complex64::new(1.0, 0.0);
        for n in 0..order {
            e *= step;
            a[n] += w * e.re;
            b[n] += w * e.im;
        }
    }
    let scale = 1.0 / (PI * radius);
    a.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= scale);
    Ok(FourierBoundaryData::new(radius, a, b)?.with_mean(m.mass() / (2.0 * PI * radius)))
}

/// Multiplies mode `n` by `exp(−n² r² / 2)`; the mean is untouched.
pub fn mollify(data: &FourierBoundaryData, r: f64) -> Result<FourierBoundaryData> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "mollification scale must be positive, got {r}"
        )));
    }
    let damp = |n: usize| (-(n as f64).powi(2) * r * r / 2.0).exp();
    let a = data.a.iter().enumerate().map(|(k, v)| v * damp(k + 1)).collect();
    let b = data.b.iter().enumerate().map(|(k, v)| v * damp(k + 1)).collect();
    let mut out = FourierBoundaryData::new(data.radius, a, b)?;
    out.mean = data.mean;
    Ok(out)
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub phi: f64,
    pub grad: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// Closed-form solution of the Neumann–Poisson problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    c: f64,
    data: FourierBoundaryData,
    /// `(a_n − i b_n)`, the coefficients of `F'(w) = Σ coeff_n w^{n−1}`.
    coeffs: Vec<Complex64>,
}

/// Builds the solution for interior source `c` and flux data `data`,
/// checking compatibility when the data carries a mean.
pub fn solve_neumann(c: f64, data: FourierBoundaryData) -> Result<PoissonSolution> {
    if !c.is_finite() {
        return Err(Error::InvalidArgument("non-finite interior source".into()));
    }
    if let Some(mean) = data.mean {
        let expected = -c * data.radius / 2.0;
        if (mean - expected).abs() > COMPATIBILITY_TOL {
            return Err(Error::InfeasibleInput(format!(
                "flux mean {mean:e} incompatible with source {c:e} (expected {expected:e})"
            )));
        }
    }
    let coeffs = data
        .a
        .iter()
        .zip(&data.b)
        .map(|(&a, &b)| Complex64::new(a, -b))
        .collect();
    Ok(PoissonSolution { c, data, coeffs })
}

impl PoissonSolution {
    pub fn source(&self) -> f64 {
        self.c
    }

    pub fn radius(&self) -> f64 {
        self.data.radius
    }

    pub fn boundary(&self) -> &FourierBoundaryData {
        &self.data
    }

    /// Checked evaluation; points beyond `R + DOMAIN_TOL` are rejected.
    pub fn eval(&self, p: Point) -> Result<Evaluation> {
        let r = self.radius();
        if p.norm() > r + DOMAIN_TOL || !p.is_finite() {
            return Err(Error::OutOfDomain([p.x, p.y], r));
        }
        Ok(self.eval_unchecked(p))
    }

    fn eval_unchecked(&self, p: Point) -> Evaluation {
        let r = self.radius();
        let c = self.c;
        let w = Complex64::new(p.x / r, p.y / r);
        let n = self.coeffs.len();
        // F = Σ (R/n) k_n w^n, F' = Σ k_n w^{n−1}, F'' = Σ (n−1) k_n w^{n−2} / R
        let mut f = Complex64::new(0.0, 0.0);
        let mut f1 = Complex64::new(0.0, 0.0);
        let mut f2 = Complex64::new(0.0, 0.0);
        for k in (1..=n).rev() {
            let coeff = self.coeffs[k - 1];
            f = f * w + coeff * (r / k as f64);
            f1 = f1 * w + coeff;
            if k >= 2 {
                f2 = f2 * w + coeff * (k as f64 - 1.0);
            }
        }
        f *= w;
        f2 /= r;
        let rr = p.norm_sq();
        let phi = -c * rr / 4.0 + f.re + c * r * r / 8.0;
        let grad = [-c * p.x / 2.0 + f1.re, -c * p.y / 2.0 - f1.im];
        let hessian = [
            [-c / 2.0 + f2.re, -f2.im],
            [-f2.im, -c / 2.0 - f2.re],
        ];
        Evaluation { phi, grad, hessian }
    }

    /// `∫_{B_R} |∇φ|²` by Parseval.
    pub fn dirichlet_energy(&self) -> f64 {
        self.energy_in(self.radius())
    }

    /// `∫_{B_ρ} |∇φ|²` for `0 ≤ ρ ≤ R`, in closed form.
    pub fn energy_in(&self, rho: f64) -> f64 {
        let r = self.radius();
        let rho = rho.clamp(0.0, r);
        let mut s = PI * self.c * self.c * rho.powi(4) / 8.0;
        let q = rho / r;
        for (k, coeff) in self.coeffs.iter().enumerate() {
            let n = (k + 1) as f64;
            s += PI * r * rho / n * q.powi(2 * k as i32 + 1) * coeff.norm_sqr();
        }
        s
    }

    /// `∫_{∂B_R} φ ρ ds` for a density `ρ` given by its Fourier data on the
    /// same circle; the mean of `ρ` pairs with the constant boundary value
    /// `−cR²/8` of the radial part.
    pub fn boundary_pairing(&self, rho: &FourierBoundaryData) -> f64 {
        let r = self.radius();
        let mut s = -self.c * r * r / 8.0 * rho.mean.unwrap_or(0.0) * 2.0 * PI * r;
        for (k, (a, b)) in rho.a.iter().zip(&rho.b).enumerate().take(self.coeffs.len()) {
            let n = (k + 1) as f64;
            let coeff = self.coeffs[k];
            s += PI * r * (r / n) * (coeff.re * a - coeff.im * b);
        }
        s
    }

    /// `∫_{∂B_R} φ² ds` by Parseval.
    pub fn boundary_l2_sq(&self) -> f64 {
        let r = self.radius();
        let edge = -self.c * r * r / 8.0;
        let mut s = 2.0 * PI * r * edge * edge;
        for (k, coeff) in self.coeffs.iter().enumerate() {
            let n = (k + 1) as f64;
            s += PI * r * (r / n).powi(2) * coeff.norm_sqr();
        }
        s
    }

    /// Coefficient-majorant bounds on `sup |∇φ|` and on the operator norm
    /// of `∇²φ` over the closed disk.
    pub fn sup_bounds(&self) -> (f64, f64) {
        let r = self.radius();
        let mut grad = self.c.abs() * r / 2.0;
        let mut hess = self.c.abs();
        for (k, (a, b)) in self.data.a.iter().zip(&self.data.b).enumerate() {
            let n = (k + 1) as f64;
            let m = a.abs() + b.abs();
            grad += std::f64::consts::SQRT_2 * m;
            hess += 2.0 * n / r * m;
        }
        (grad, hess)
    }
}

/// Free-function form of [`PoissonSolution::eval`].
pub fn eval(sol: &PoissonSolution, p: Point) -> Result<Evaluation> {
    sol.eval(p)
}

/// Free-function form of [`PoissonSolution::dirichlet_energy`].
pub fn dirichlet_energy(sol: &PoissonSolution) -> f64 {
    sol.dirichlet_energy()
}

/// Free-function form of [`PoissonSolution::sup_bounds`].
pub fn sup_bounds(sol: &PoissonSolution) -> (f64, f64) {
    sol.sup_bounds()
}

impl SmoothField for PoissonSolution {
    fn value(&self, p: Point) -> f64 {
        self.eval_unchecked(p).phi
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        self.eval_unchecked(p).grad
    }

    fn hessian(&self, p: Point) -> [[f64; 2]; 2] {
        self.eval_unchecked(p).hessian
    }

    fn laplacian(&self, _p: Point) -> f64 {
        -self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(radius: f64, n: usize, a: f64, b: f64, order: usize) -> FourierBoundaryData {
        let mut ca = vec![0.0; order];
        let mut cb = vec![0.0; order];
        ca[n - 1] = a;
        cb[n - 1] = b;
        FourierBoundaryData::new(radius, ca, cb).unwrap()
    }

    #[test]
    fn linear_mode() {
        let sol = solve_neumann(0.0, mode(2.0, 1, 1.0, 0.0, 4)).unwrap();
        for p in [Point::new(0.3, -1.2), Point::new(-1.9, 0.1), Point::ORIGIN] {
            let e = sol.eval(p).unwrap();
            assert!((e.phi - p.x).abs() < 1e-14);
            assert!((e.grad[0] - 1.0).abs() < 1e-14 && e.grad[1].abs() < 1e-14);
            assert!(e.hessian.iter().flatten().all(|v| v.abs() < 1e-14));
        }
        assert!((sol.dirichlet_energy() - 4.0 * PI).abs() < 1e-12);
        let (g, h) = sol.sup_bounds();
        assert!(g >= 1.0 && h >= 0.0);
    }

    #[test]
    fn sine_mode_is_y() {
        let sol = solve_neumann(0.0, mode(3.0, 1, 0.0, 1.0, 1)).unwrap();
        let e = sol.eval(Point::new(0.5, 0.7)).unwrap();
        assert!((e.phi - 0.7).abs() < 1e-14);
        assert!(e.grad[0].abs() < 1e-14 && (e.grad[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radial_solution() {
        let data = FourierBoundaryData::zero(2.0, 8).unwrap().with_mean(-1.0);
        let sol = solve_neumann(1.0, data).unwrap();
        let e = sol.eval(Point::new(1.0, 0.0)).unwrap();
        assert!((e.grad[0] + 0.5).abs() < 1e-15 && e.grad[1].abs() < 1e-15);
        assert!((e.phi - (-0.25 + 0.5)).abs() < 1e-15);
        assert!((sol.laplacian(Point::new(0.2, 0.3)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_data() {
        let sol = solve_neumann(0.0, FourierBoundaryData::zero(2.0, 16).unwrap()).unwrap();
        assert_eq!(sol.eval(Point::new(0.4, 0.4)).unwrap().phi, 0.0);
        assert_eq!(sol.dirichlet_energy(), 0.0);
        assert_eq!(sol.sup_bounds(), (0.0, 0.0));
    }

    #[test]
    fn incompatible_data_is_rejected() {
        let data = FourierBoundaryData::zero(2.0, 4).unwrap().with_mean(0.3);
        assert!(matches!(solve_neumann(1.0, data), Err(Error::InfeasibleInput(_))));
    }

    #[test]
    fn out_of_domain() {
        let sol = solve_neumann(0.0, mode(2.0, 1, 1.0, 0.0, 1)).unwrap();
        assert!(matches!(sol.eval(Point::new(2.1, 0.0)), Err(Error::OutOfDomain(..))));
        assert!(sol.eval(Point::new(2.0, 0.0)).is_ok());
    }

    #[test]
    fn coefficients_of_atoms() {
        let radius = 2.0;
        let g = DiscreteMeasure::uniform_weights(vec![Point::new(radius, 0.0)], 1.0).unwrap();
        let f = DiscreteMeasure::empty();
        // (g − f)(∂B) = 1 = −cπR²
        let c = -1.0 / (PI * radius * radius);
        let d = boundary_data_from_measures(&g, &f, radius, 6, c).unwrap();
        for n in 0..6 {
            assert!((d.cos_coeffs()[n] - 1.0 / (2.0 * PI)).abs() < 1e-15);
            assert!(d.sin_coeffs()[n].abs() < 1e-15);
        }
        assert!(matches!(
            boundary_data_from_measures(&g, &f, radius, 6, 0.0),
            Err(Error::InfeasibleInput(_))
        ));

        let two = DiscreteMeasure::uniform_weights(
            vec![Point::new(radius, 0.0), Point::new(-radius, 0.0)],
            1.0,
        )
        .unwrap();
        let d = circle_measure_coefficients(&two, radius, 4).unwrap();
        assert!(d.cos_coeffs()[0].abs() < 1e-15 && d.cos_coeffs()[2].abs() < 1e-15);
        // 2 / (πR) at R = 2
        assert!((d.cos_coeffs()[1] - 1.0 / PI).abs() < 1e-15);

        let same = boundary_data_from_measures(&two, &two, radius, 4, 0.0).unwrap();
        assert!(same.cos_coeffs().iter().chain(same.sin_coeffs()).all(|v| *v == 0.0));

        let off = DiscreteMeasure::uniform_weights(vec![Point::new(1.0, 0.0)], 1.0).unwrap();
        assert!(matches!(
            circle_measure_coefficients(&off, radius, 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn mollification_damping() {
        let d = mode(2.0, 2, 1.0, 0.0, 4);
        let m = mollify(&d, 0.5).unwrap();
        assert!((m.cos_coeffs()[1] - (-0.5f64).exp()).abs() < 1e-15);
        assert!(mollify(&d, 0.0).is_err());
    }

    #[test]
    fn density_and_parseval() {
        let d = mode(1.5, 3, 0.4, -0.2, 5).with_mean(0.1);
        let n = 4096;
        let mut q = 0.0;
        for k in 0..n {
            let t = 2.0 * PI * k as f64 / n as f64;
            q += d.density(t).powi(2) * 1.5 * 2.0 * PI / n as f64;
        }
        assert!((q - d.l2_norm_sq()).abs() < 1e-12);
    }
}
