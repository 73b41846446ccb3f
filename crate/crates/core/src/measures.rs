//! Weighted planar point clouds, restriction to centered balls, grid
//! discretization of the uniform density and transference plans.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for mass comparisons.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        (self - other).norm_sq()
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Point on the segment `self -> other` at time `t`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        Point::new(self * p.x, self * p.y)
    }
}

/// Ball centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    radius: f64,
}

impl Ball {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Ball { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Membership in the open ball. Every module uses this predicate so that
    /// interior mass and boundary fluxes never double count an atom.
    pub fn contains(&self, p: Point) -> bool {
        p.norm_sq() < self.radius * self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Compensated (Neumaier) summation.
pub fn sum_exact<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A finite nonnegative measure made of weighted atoms in the plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
    mass: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureFile {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure, dropping zero-weight atoms.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut pts = Vec::with_capacity(points.len());
        let mut ws = Vec::with_capacity(weights.len());
        for (p, w) in points.into_iter().zip(weights) {
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite point {p:?}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("invalid weight {w}")));
            }
            if w > 0.0 {
                pts.push(p);
                ws.push(w);
            }
        }
        Ok(Self::from_parts(pts, ws))
    }

    pub fn from_atoms<I: IntoIterator<Item = (Point, f64)>>(atoms: I) -> Result<Self> {
        let (points, weights) = atoms.into_iter().unzip();
        Self::new(points, weights)
    }

    /// Atoms that all share the same weight.
    pub fn uniform_weights(points: Vec<Point>, weight: f64) -> Result<Self> {
        let weights = vec![weight; points.len()];
        Self::new(points, weights)
    }

    fn from_parts(points: Vec<Point>, weights: Vec<f64>) -> Self {
        let mass = sum_exact(weights.iter().copied());
        DiscreteMeasure {
            points,
            weights,
            mass,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        Self::from_parts(
            self.points.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }

    /// Concatenation of the atom lists of `self` and `other`.
    pub fn concat(&self, other: &DiscreteMeasure) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Self::from_parts(points, weights)
    }

    /// Integral of `f` against the measure.
    pub fn integrate<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        sum_exact(self.atoms().map(|(p, w)| w * f(p)))
    }

    /// Mass of the atoms inside the open ball.
    pub fn mass_in(&self, ball: &Ball) -> f64 {
        sum_exact(
            self.atoms()
                .filter(|(p, _)| ball.contains(*p))
                .map(|(_, w)| w),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        Self::new(
            file.points.into_iter().map(Point::from).collect(),
            file.weights,
        )
    }

    pub fn to_json(&self) -> String {
        let file = MeasureFile {
            points: self.points.iter().map(|&p| p.into()).collect(),
            weights: self.weights.clone(),
        };
        serde_json::to_string(&file).expect("measure serialization cannot fail")
    }
}

/// Sub-measure of the atoms strictly inside `ball`.
pub fn restrict(m: &DiscreteMeasure, ball: &Ball) -> DiscreteMeasure {
    restrict_indexed(m, ball).0
}

/// Like [`restrict`], also returning the original index of every kept atom.
pub fn restrict_indexed(m: &DiscreteMeasure, ball: &Ball) -> (DiscreteMeasure, Vec<usize>) {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut index = Vec::new();
    for (i, (p, w)) in m.atoms().enumerate() {
        if ball.contains(p) {
            points.push(p);
            weights.push(w);
            index.push(i);
        }
    }
    (DiscreteMeasure::from_parts(points, weights), index)
}

/// Square-grid discretization of the uniform measure on `ball`.
///
/// Atoms sit at the cell centers `((i + ½)h, (j + ½)h)` that lie inside the
/// open ball; weights are equal and the rounding residual of the rescaling is
/// pushed onto the largest atom so that the total mass is `target_mass`.
pub fn uniform_disc(ball: &Ball, spacing: f64, target_mass: f64) -> Result<DiscreteMeasure> {
    let radius = ball.radius();
    if !(spacing > 0.0 && spacing < radius) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing {spacing} must lie in (0, {radius})"
        )));
    }
    if !(target_mass > 0.0 && target_mass.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target mass must be positive, got {target_mass}"
        )));
    }
    let k = (radius / spacing).ceil() as i64 + 1;
    let mut points = Vec::new();
    for j in -k..k {
        for i in -k..k {
            let p = Point::new((i as f64 + 0.5) * spacing, (j as f64 + 0.5) * spacing);
            if ball.contains(p) {
                points.push(p);
            }
        }
    }
    let w = target_mass / points.len() as f64;
    let mut weights = vec![w; points.len()];
    let residual = target_mass - sum_exact(weights.iter().copied());
    // all weights are equal, so the first atom is the largest
    weights[0] += residual;
    Ok(DiscreteMeasure::from_parts(points, weights))
}

/// One atom of a transference plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse transference plan between two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    entries: Vec<CouplingEntry>,
}

impl Coupling {
    /// Builds a plan from raw entries. Entries with nonpositive mass are
    /// dropped; indices are validated but marginals are not; see
    /// [`Coupling::marginal_error`] and [`Coupling::new_checked`].
    pub fn new(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        entries: Vec<CouplingEntry>,
    ) -> Result<Self> {
        let mut kept = Vec::with_capacity(entries.len());
        for e in entries {
            if e.source >= source.len() || e.target >= target.len() {
                return Err(Error::InvalidInput(format!(
                    "entry ({}, {}) out of range for {}x{} plan",
                    e.source,
                    e.target,
                    source.len(),
                    target.len()
                )));
            }
            if !e.mass.is_finite() {
                return Err(Error::InvalidInput("non-finite entry mass".into()));
            }
            if e.mass > 0.0 {
                kept.push(e);
            }
        }
        Ok(Coupling {
            source,
            target,
            entries: kept,
        })
    }

    /// [`Coupling::new`] followed by a per-atom admissibility check.
    pub fn new_checked(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        entries: Vec<CouplingEntry>,
        tol: f64,
    ) -> Result<Self> {
        let c = Self::new(source, target, entries)?;
        let err = c.marginal_error();
        if err > tol {
            return Err(Error::InfeasibleInput(format!(
                "plan marginals deviate by {err:e} (tolerance {tol:e})"
            )));
        }
        Ok(c)
    }

    /// The plan that leaves every atom of `m` in place.
    pub fn identity(m: &DiscreteMeasure) -> Self {
        let entries = (0..m.len())
            .map(|i| CouplingEntry {
                source: i,
                target: i,
                mass: m.weight(i),
            })
            .collect();
        Coupling {
            source: m.clone(),
            target: m.clone(),
            entries,
        }
    }

    /// Independent coupling `a ⊗ b / mass(a)`; requires equal masses.
    pub fn product(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidArgument("product of empty measures".into()));
        }
        let mut entries = Vec::with_capacity(a.len() * b.len());
        for i in 0..a.len() {
            for j in 0..b.len() {
                entries.push(CouplingEntry {
                    source: i,
                    target: j,
                    mass: a.weight(i) * b.weight(j) / b.mass(),
                });
            }
        }
        Self::new(a.clone(), b.clone(), entries)
    }

    pub fn source(&self) -> &DiscreteMeasure {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn endpoints(&self, e: &CouplingEntry) -> (Point, Point) {
        (self.source.point(e.source), self.target.point(e.target))
    }

    /// Iterates `(x, y, mass)` over the support.
    pub fn pairs(&self) -> impl Iterator<Item = (Point, Point, f64)> + '_ {
        self.entries.iter().map(move |e| {
            let (x, y) = self.endpoints(e);
            (x, y, e.mass)
        })
    }

    /// Total quadratic cost `Σ mass·|x − y|²`.
    pub fn cost(&self) -> f64 {
        sum_exact(self.pairs().map(|(x, y, m)| m * x.dist_sq(y)))
    }

    /// Per-atom accumulated marginal weights (source side, target side).
    pub fn marginal_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let mut src = vec![Vec::new(); self.source.len()];
        let mut tgt = vec![Vec::new(); self.target.len()];
        for e in &self.entries {
            src[e.source].push(e.mass);
            tgt[e.target].push(e.mass);
        }
        (
            src.into_iter().map(sum_exact).collect(),
            tgt.into_iter().map(sum_exact).collect(),
        )
    }

    /// Largest per-atom deviation between accumulated marginals and the
    /// declared source and target weights.
    pub fn marginal_error(&self) -> f64 {
        let (src, tgt) = self.marginal_weights();
        let a = src
            .iter()
            .zip(self.source.weights())
            .map(|(s, w)| (s - w).abs());
        let b = tgt
            .iter()
            .zip(self.target.weights())
            .map(|(s, w)| (s - w).abs());
        a.chain(b).fold(0.0, f64::max)
    }

    /// Swaps the roles of source and target.
    pub fn reversed(&self) -> Coupling {
        Coupling {
            source: self.target.clone(),
            target: self.source.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| CouplingEntry {
                    source: e.target,
                    target: e.source,
                    mass: e.mass,
                })
                .collect(),
        }
    }
}

/// Marginals accumulated from the entries of `c`, on the atom locations of
/// its declared source and target.
pub fn marginals(c: &Coupling) -> (DiscreteMeasure, DiscreteMeasure) {
    let (src, tgt) = c.marginal_weights();
    let a = DiscreteMeasure::new(c.source().points().to_vec(), src)
        .expect("accumulated marginals are finite and nonnegative");
    let b = DiscreteMeasure::new(c.target().points().to_vec(), tgt)
        .expect("accumulated marginals are finite and nonnegative");
    (a, b)
}
