//! Normal-boundary intersection with true function evaluations.
//!
//! Phase one minimizes each objective separately; phase two solves, for
//! every weight vector, `max λ` subject to `Φβ + λn = f(x) − f*` through the
//! penalty `−λ + ρ‖Φβ + λn − f(x) + f*‖²`. Both phases use Nelder-Mead and
//! every evaluation is charged against the budget.

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::problems::Problem;
use crate::simplex::riesz_weights;
use crate::types::Dataset;

/// Penalty weight of the equality constraint.
pub const PENALTY: f64 = 1e3;
/// Constraint residual (objective space) below which a solution is accepted.
pub const ACCEPT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct NbiSolution {
    pub beta_index: usize,
    pub beta: Vec<f64>,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
}

impl NbiSolution {
    pub fn accepted(&self) -> bool {
        self.residual <= ACCEPT_TOL
    }
}

#[derive(Debug, Clone)]
pub struct NbiReport {
    /// Every evaluation in order.
    pub data: Dataset,
    /// Per evaluation: `0` for phase one, `k + 1` for the subproblem of weight `k`.
    pub stage: Vec<usize>,
    pub individual_minima: Vec<(Vec<f64>, Vec<f64>)>,
    /// Columns are `f(x*_m) − f*`.
    pub phi: Vec<Vec<f64>>,
    pub solutions: Vec<NbiSolution>,
    pub budget_used: usize,
}

struct Ledger<'a> {
    f: &'a dyn Fn(&[f64]) -> Result<Vec<f64>>,
    lower: &'a [f64],
    upper: &'a [f64],
    budget: usize,
    data: Dataset,
    stage: Vec<usize>,
    error: Option<Error>,
}

impl Ledger<'_> {
    fn remaining(&self) -> usize {
        self.budget - self.data.len()
    }

    /// Evaluates the unit-cube point `u` (clamped), or `None` once the budget
    /// is spent or an evaluation failed.
    fn eval(&mut self, u: &[f64], stage: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.remaining() == 0 || self.error.is_some() {
            return None;
        }
        let x: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(d, v)| self.lower[d] + v.clamp(0.0, 1.0) * (self.upper[d] - self.lower[d]))
            .collect();
        match (self.f)(&x).and_then(|y| self.data.push(x.clone(), y.clone()).map(|_| y)) {
            Ok(y) => {
                self.stage.push(stage);
                Some((x, y))
            }
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }
}

/// Runs the method on `problem`; returns all evaluations.
pub fn nbi_run(problem: &Problem, budget: usize, n_beta: usize, seed: u64) -> Result<Dataset> {
    Ok(nbi_run_detailed(problem, budget, n_beta, seed)?.data)
}

pub fn nbi_run_detailed(
    problem: &Problem,
    budget: usize,
    n_beta: usize,
    seed: u64,
) -> Result<NbiReport> {
    if !problem.is_supported() {
        return Err(Error::UnsupportedProblem(problem.name.to_string()));
    }
    nbi_with(
        &|x| problem.evaluate(x),
        &problem.lower,
        &problem.upper,
        problem.n_obj,
        budget,
        n_beta,
        seed,
    )
}

/// The method on an arbitrary box-constrained objective.
pub fn nbi_with(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    lower: &[f64],
    upper: &[f64],
    n_obj: usize,
    budget: usize,
    n_beta: usize,
    seed: u64,
) -> Result<NbiReport> {
    if budget == 0 || n_beta == 0 {
        return Err(Error::InvalidConfig(
            "budget and n_beta must be positive".into(),
        ));
    }
    let dim = lower.len();
    let mut ledger = Ledger {
        f,
        lower,
        upper,
        budget,
        data: Dataset::new(),
        stage: vec![],
        error: None,
    };

    // Phase one: individual minima.
    let mut minima: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::with_capacity(n_obj);
    let per_objective = (budget / (2 * n_obj)).max(dim + 2);
    for m in 0..n_obj {
        let mut best: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;
        let opts = NelderMeadOptions {
            max_evals: per_objective.min(ledger.remaining()),
            f_tol: 1e-12,
            x_tol: 1e-9,
            initial_step: 0.25,
        };
        nelder_mead(
            |u| {
                let (x, y) = ledger.eval(u, 0)?;
                if best.as_ref().is_none_or(|b| y[m] < b.2[m]) {
                    best = Some((u.iter().map(|v| v.clamp(0.0, 1.0)).collect(), x, y.clone()));
                }
                Some(y[m])
            },
            &vec![0.5; dim],
            opts,
        );
        match best {
            Some(b) => minima.push(b),
            None => break,
        }
    }
    if let Some(e) = ledger.error.take() {
        return Err(e);
    }
    let finish =
        |ledger: Ledger<'_>, minima: &[(Vec<f64>, Vec<f64>, Vec<f64>)], phi, solutions| NbiReport {
            budget_used: ledger.data.len(),
            data: ledger.data,
            stage: ledger.stage,
            individual_minima: minima
                .iter()
                .map(|(_, x, y)| (x.clone(), y.clone()))
                .collect(),
            phi,
            solutions,
        };
    if minima.len() < n_obj || ledger.remaining() == 0 {
        return Ok(finish(ledger, &minima, vec![], vec![]));
    }

    let f_star: Vec<f64> = (0..n_obj).map(|m| minima[m].2[m]).collect();
    let phi: Vec<Vec<f64>> = minima
        .iter()
        .map(|(_, _, y)| y.iter().zip(&f_star).map(|(a, b)| a - b).collect())
        .collect();
    let sum: Vec<f64> = (0..n_obj).map(|k| phi.iter().map(|c| c[k]).sum()).collect();
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    let normal: Vec<f64> = if norm > 0.0 {
        sum.iter().map(|v| -v / norm).collect()
    } else {
        vec![-1.0 / (n_obj as f64).sqrt(); n_obj]
    };
    let scale = phi
        .iter()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-12);

    // Phase two: one penalized subproblem per weight vector.
    let weights = riesz_weights(n_obj, n_beta, seed);
    let mut solutions = Vec::new();
    for (k, beta) in weights.iter().enumerate() {
        let left = weights.len() - k;
        let cap = (ledger.remaining() / left).max(1);
        let u_pt: Vec<f64> = (0..n_obj)
            .map(|i| phi.iter().zip(beta).map(|(c, b)| c[i] * b).sum())
            .collect();
        let x0: Vec<f64> = (0..dim)
            .map(|d| {
                minima
                    .iter()
                    .zip(beta)
                    .map(|(m, b)| m.0[d] * b)
                    .sum::<f64>()
                    .clamp(0.0, 1.0)
            })
            .collect();
        let Some((_, y0)) = ledger.eval(&x0, k + 1) else {
            break;
        };
        let lambda0: f64 = (0..n_obj)
            .map(|i| (y0[i] - f_star[i] - u_pt[i]) * normal[i])
            .sum();
        let mut z0 = x0.clone();
        z0.push(lambda0 / scale);

        let mut best: Option<NbiSolution> = None;
        let opts = NelderMeadOptions {
            max_evals: cap.saturating_sub(1).max(1),
            f_tol: 1e-14,
            x_tol: 1e-10,
            initial_step: 0.1,
        };
        nelder_mead(
            |z| {
                let (x, y) = ledger.eval(&z[..dim], k + 1)?;
                let lambda = z[dim] * scale;
                let residual = (0..n_obj)
                    .map(|i| (u_pt[i] + lambda * normal[i] - (y[i] - f_star[i])).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let obj = -lambda / scale + PENALTY * (residual / scale).powi(2);
                let sol = NbiSolution {
                    beta_index: k,
                    beta: beta.clone(),
                    x,
                    f: y,
                    lambda,
                    residual,
                };
                let better = match &best {
                    None => true,
                    Some(b) => match (sol.accepted(), b.accepted()) {
                        (true, false) => true,
                        (false, true) => false,
                        (true, true) => sol.lambda > b.lambda,
                        (false, false) => sol.residual < b.residual,
                    },
                };
                if better {
                    best = Some(sol);
                }
                Some(obj)
            },
            &z0,
            opts,
        );
        if let Some(b) = best {
            solutions.push(b);
        }
        if ledger.error.is_some() || ledger.remaining() == 0 {
            break;
        }
    }
    if let Some(e) = ledger.error.take() {
        return Err(e);
    }
    Ok(finish(ledger, &minima, phi, solutions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![x[0] * x[0], (x[0] - 1.0).powi(2)])
    }

    #[test]
    fn individual_minima_of_the_toy_problem() {
        let rep = nbi_with(&toy, &[0.0], &[1.0], 2, 2000, 3, 0).unwrap();
        let (x0, f0) = &rep.individual_minima[0];
        let (x1, f1) = &rep.individual_minima[1];
        assert!(x0[0].abs() < 0.05 && (f0[1] - 1.0).abs() < 0.1);
        assert!((x1[0] - 1.0).abs() < 0.05 && (f1[0] - 1.0).abs() < 0.1);
    }

    #[test]
    fn central_subproblem_hits_the_midpoint() {
        let rep = nbi_with(&toy, &[0.0], &[1.0], 2, 2000, 3, 0).unwrap();
        let mid = rep
            .solutions
            .iter()
            .min_by(|a, b| (a.beta[0] - 0.5).abs().total_cmp(&(b.beta[0] - 0.5).abs()))
            .unwrap();
        assert!((mid.beta[0] - 0.5).abs() < 0.02);
        assert!((mid.x[0] - 0.5).abs() < 0.05, "{mid:?}");
        assert!(mid.accepted());
        assert!((mid.f[0] - 0.25).abs() < 0.05 && (mid.f[1] - 0.25).abs() < 0.05);
        for s in rep.solutions.iter().filter(|s| s.accepted()) {
            assert!(s.residual <= ACCEPT_TOL);
        }
    }

    #[test]
    fn budget_is_never_exceeded() {
        for budget in [1, 2, 3, 7, 25, 100] {
            let rep = nbi_with(&toy, &[0.0], &[1.0], 2, budget, 5, 1).unwrap();
            assert!(rep.data.len() <= budget);
            assert_eq!(rep.budget_used, rep.data.len());
            assert_eq!(rep.stage.len(), rep.data.len());
        }
        // A budget below the phase-one cost is spent exactly.
        let p = Problem::by_name("dtlz2-m2").unwrap();
        assert_eq!(nbi_run(&p, 5, 20, 0).unwrap().len(), 5);
        let full = nbi_run_detailed(&p, 200, 20, 0).unwrap();
        assert!(full.data.len() <= 200);
        assert!(full
            .data
            .xs()
            .iter()
            .flatten()
            .all(|v| (0.0..=1.0).contains(v)));
    }
}
