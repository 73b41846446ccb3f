//! Numerical laboratory for harmonic approximation of quadratic optimal
//! transport plans in the plane.

pub mod boundary_approx;
pub mod error;
pub mod experiment;
pub mod localization;
pub mod measures;
pub mod ot;
pub mod poisson2d;
pub mod quadrature;
pub mod trajectories;

pub use error::{Error, Result};
