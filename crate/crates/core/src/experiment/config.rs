use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    PerturbedLattice,
    PoissonCloud,
    AtomicClusters,
}

/// Parameters of one experiment; field names match the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub generator: Generator,
    pub epsilon: f64,
    pub grid_h: f64,
    #[serde(rename = "fourier_N")]
    pub fourier_n: usize,
    pub mollify_r: f64,
    #[serde(rename = "R_grid_count")]
    pub r_grid_count: usize,
    pub theta: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            generator: Generator::PerturbedLattice,
            epsilon: 0.1,
            grid_h: 0.25,
            fourier_n: 128,
            mollify_r: 0.2,
            r_grid_count: 33,
            theta: 0.5,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.grid_h > 0.0 && self.grid_h < 2.0) {
            return bad(format!("grid_h must lie in (0, 2), got {}", self.grid_h));
        }
        if self.fourier_n == 0 {
            return bad("fourier_N must be positive".into());
        }
        if !(self.mollify_r > 0.0 && self.mollify_r.is_finite()) {
            return bad(format!("mollify_r must be positive, got {}", self.mollify_r));
        }
        if self.r_grid_count == 0 {
            return bad("R_grid_count must be positive".into());
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta must lie in (0, 1), got {}", self.theta));
        }
        Ok(())
    }

    /// Radii `2 + k/(count − 1)`, or `{2.5}` when the count is 1.
    pub fn radius_grid(&self) -> Vec<f64> {
        radius_grid(self.r_grid_count)
    }
}

pub fn radius_grid(count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![2.5];
    }
    (0..count)
        .map(|k| 2.0 + k as f64 / (count - 1) as f64)
        .collect()
}
