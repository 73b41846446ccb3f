//! Synthetic instances on `B_6`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Generator};
use crate::error::Result;
use crate::measures::{Ball, DiscreteMeasure, Point};

/// Support radius of generated measures.
pub const SUPPORT_RADIUS: f64 = 6.0;
/// Number of heavy atoms of the cluster generator.
pub const CLUSTER_COUNT: usize = 7;
/// Radius of the disc holding the first cluster.
pub const CORE_RADIUS: f64 = 2.0;

/// Cell-centered lattice of spacing `h` inside the open ball of radius 6,
/// each atom carrying the cell area `h²`.
pub fn lattice(h: f64) -> Result<DiscreteMeasure> {
    let ball = Ball::new(SUPPORT_RADIUS)?;
    let k = (SUPPORT_RADIUS / h).ceil() as i64 + 1;
    let mut points = Vec::new();
    for j in -k..k {
        for i in -k..k {
            let p = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if ball.contains(p) {
                points.push(p);
            }
        }
    }
    DiscreteMeasure::uniform_weights(points, h * h)
}

/// Perturbation field of the lattice generator: the unit translation
/// `∇(0.6 x + 0.8 y)`, harmonic with `|v| = 1`. Its flux through every
/// circle is nonzero, so the boundary data never vanish identically.
pub fn perturbation(_p: Point) -> Point {
    Point::new(0.6, 0.8)
}

fn uniform_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> Point {
    loop {
        let p = Point::new(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        );
        if p.norm_sq() < radius * radius {
            return p;
        }
    }
}

/// `(λ, μ)` for a configuration; deterministic in the seed.
pub fn generate(config: &ExperimentConfig) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let h = config.grid_h;
    match config.generator {
        Generator::PerturbedLattice => {
            let mu = lattice(h)?;
            let eps = config.epsilon;
            let points = mu
                .points()
                .iter()
                .map(|&p| p + eps * perturbation(p))
                .collect();
            let lambda = DiscreteMeasure::new(points, mu.weights().to_vec())?;
            Ok((lambda, mu))
        }
        Generator::PoissonCloud => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let n = lattice(h)?.len();
            let area = std::f64::consts::PI * SUPPORT_RADIUS * SUPPORT_RADIUS;
            let w = area / n as f64;
            let a = (0..n).map(|_| uniform_in_disc(&mut rng, SUPPORT_RADIUS)).collect();
            let b = (0..n).map(|_| uniform_in_disc(&mut rng, SUPPORT_RADIUS)).collect();
            Ok((
                DiscreteMeasure::uniform_weights(a, w)?,
                DiscreteMeasure::uniform_weights(b, w)?,
            ))
        }
        Generator::AtomicClusters => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mu = lattice(h)?;
            let w = mu.mass() / CLUSTER_COUNT as f64;
            // the first cluster sits in B_2 so every ball of the radius grid
            // holds source mass
            let centers = (0..CLUSTER_COUNT)
                .map(|k| {
                    let radius = if k == 0 { CORE_RADIUS } else { SUPPORT_RADIUS };
                    uniform_in_disc(&mut rng, radius)
                })
                .collect();
            Ok((DiscreteMeasure::uniform_weights(centers, w)?, mu))
        }
    }
}
