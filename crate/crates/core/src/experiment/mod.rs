//! Synthetic instances, the full pipeline, radius selection, the
//! verification table and ε-sweeps.

pub mod config;
pub mod generate;
pub mod pipeline;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, Generator};
pub use generate::generate;
pub use pipeline::{
    run_harmonic_approximation, run_pipeline, select_radius, ExperimentReport, MollifyRule,
    PipelineState,
};
pub use sweep::{run_sweep, sweep_csv, SweepRow, CSV_HEADER};
pub use verify::{verify_identities, VerifyRow, VerifyTable};
