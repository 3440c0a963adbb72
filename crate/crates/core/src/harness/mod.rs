//! Experiment driver: configuration, the per-seed loop, and CSV output.

pub mod config;
pub mod engine;
pub mod output;

pub use config::{Algorithm, RunConfig};
pub use engine::{initial_design, run_seed, EvalRecord, IterationTrace, SeedRun};
pub use output::{run, RunOutcome};
