#![allow(dead_code)]

use otha_core::measures::{sum_exact, Coupling, CouplingEntry, DiscreteMeasure, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn point_in(range: f64) -> impl Strategy<Value = Point> {
    (-range..range, -range..range).prop_map(|(x, y)| Point::new(x, y))
}

/// Measure with `1..=max` atoms in the square `[-range, range]²`.
pub fn measure(max: usize, range: f64) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((point_in(range), 0.05f64..1.0), 1..=max).prop_map(|atoms| {
        DiscreteMeasure::from_atoms(atoms).unwrap()
    })
}

/// Measure rescaled to unit mass.
pub fn unit_measure(max: usize, range: f64) -> impl Strategy<Value = DiscreteMeasure> {
    measure(max, range).prop_map(|m| {
        let s = 1.0 / m.mass();
        m.scaled(s)
    })
}

/// Random admissible plan: a sparse mass matrix whose row and column sums
/// define the marginals.
pub fn random_coupling(rng: &mut impl Rng, n_src: usize, n_tgt: usize, range: f64) -> Coupling {
    let pt = |rng: &mut dyn rand::RngCore| {
        Point::new(rng.gen_range(-range..range), rng.gen_range(-range..range))
    };
    let xs: Vec<Point> = (0..n_src).map(|_| pt(rng)).collect();
    let ys: Vec<Point> = (0..n_tgt).map(|_| pt(rng)).collect();
    let mut entries = Vec::new();
    for i in 0..n_src {
        // every row and column gets at least one entry
        entries.push(CouplingEntry {
            source: i,
            target: i % n_tgt,
            mass: rng.gen_range(0.01..1.0),
        });
    }
    for j in n_src..n_tgt {
        entries.push(CouplingEntry {
            source: j % n_src,
            target: j,
            mass: rng.gen_range(0.01..1.0),
        });
    }
    for _ in 0..(n_src + n_tgt) {
        entries.push(CouplingEntry {
            source: rng.gen_range(0..n_src),
            target: rng.gen_range(0..n_tgt),
            mass: rng.gen_range(0.01..1.0),
        });
    }
    let mut src = vec![Vec::new(); n_src];
    let mut tgt = vec![Vec::new(); n_tgt];
    for e in &entries {
        src[e.source].push(e.mass);
        tgt[e.target].push(e.mass);
    }
    let a = DiscreteMeasure::new(xs, src.into_iter().map(sum_exact).collect()).unwrap();
    let b = DiscreteMeasure::new(ys, tgt.into_iter().map(sum_exact).collect()).unwrap();
    Coupling::new(a, b, entries).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Equal-weight measure from points.
pub fn equal(points: Vec<Point>, total: f64) -> DiscreteMeasure {
    let w = total / points.len() as f64;
    DiscreteMeasure::uniform_weights(points, w).unwrap()
}

/// Lattice target on `B_6` and a source displaced by `eps·v` plus a
/// seeded uniform jitter of amplitude `jitter` per coordinate.
pub fn jittered_lattice(
    h: f64,
    eps: f64,
    jitter: f64,
    seed: u64,
) -> (DiscreteMeasure, DiscreteMeasure) {
    use otha_core::experiment::generate::{lattice, perturbation};
    let mu = lattice(h).unwrap();
    let mut r = rng(seed);
    let pts = mu
        .points()
        .iter()
        .map(|&p| {
            let j = if jitter > 0.0 {
                Point::new(r.gen_range(-jitter..jitter), r.gen_range(-jitter..jitter))
            } else {
                Point::ORIGIN
            };
            p + eps * perturbation(p) + j
        })
        .collect();
    let lambda = DiscreteMeasure::new(pts, mu.weights().to_vec()).unwrap();
    (lambda, mu)
}
