//! Multi-objective Bayesian optimization along orthogonal search directions.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod batch;
pub mod error;
pub mod geometry;
pub mod gp;
pub mod harness;
pub mod hypervolume;
pub mod metrics;
pub mod optim;
pub mod pfe;
pub mod problems;
pub mod sampling;
pub mod simplex;
pub mod subproblem;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    dominates, ideal_nadir, offset_nonnegative, pareto_filter, Dataset, DesignPoint,
    ObjectiveVector, ParetoArchive,
};
