//! Reference algorithms run under the same evaluation budget.

pub mod nbi;

use rand::Rng;

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::sampling::stream;
use crate::types::Dataset;

pub use nbi::{nbi_run, nbi_run_detailed, nbi_with, NbiReport, NbiSolution};

/// `budget` independent uniform samples of the problem box.
pub fn random_search(problem: &Problem, budget: usize, seed: u64) -> Result<Dataset> {
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()));
    }
    let mut rng = stream(seed, &[0x7a5d]);
    let mut data = Dataset::new();
    for _ in 0..budget {
        let x: Vec<f64> = (0..problem.dim)
            .map(|d| rng.random_range(problem.lower[d]..=problem.upper[d]))
            .collect();
        let y = problem.evaluate(&x)?;
        data.push(x, y)?;
    }
    Ok(data)
}
