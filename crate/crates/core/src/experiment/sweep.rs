use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::generate::generate;
use super::pipeline::{run_pipeline, ExperimentReport, MollifyRule};
use crate::error::Result;

pub const CSV_HEADER: &str = "epsilon,E,D,R,lhs_ao89,ratio,energy_ratio,crossing_cost,max_disp";

/// One ε of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub report: ExperimentReport,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let r = &self.report;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epsilon,
            r.e,
            r.d,
            r.r_selected,
            r.lhs_ao89,
            opt(r.ratio),
            opt(r.energy_ratio),
            r.crossing_cost,
            r.max_displacement
        )
    }
}

/// Runs the pipeline once per ε with every other setting from `base`;
/// rows come back in the order of `epsilons`.
pub fn run_sweep(base: &ExperimentConfig, epsilons: &[f64], rule: MollifyRule) -> Result<Vec<SweepRow>> {
    epsilons
        .par_iter()
        .map(|&epsilon| {
            let config = ExperimentConfig {
                epsilon,
                ..base.clone()
            };
            let (lambda, mu) = generate(&config)?;
            let report = run_pipeline(&lambda, &mu, &config, rule)?.report;
            Ok(SweepRow { epsilon, report })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}
