//! The optimization loop for one seed.

use std::time::Instant;

use crate::baselines::{nbi_run_detailed, random_search};
use crate::batch::{fill_by_uncertainty, select_batch, CandidatePool};
use crate::error::{Error, Result};
use crate::geometry::build_frame;
use crate::gp::{FitOptions, KernelParams, Surrogate};
use crate::hypervolume::hypervolume;
use crate::metrics::log_gap;
use crate::pfe::{exploration_directions, sample_pfe};
use crate::problems::Problem;
use crate::sampling::{derive_seed, scrambled_halton};
use crate::simplex::riesz_weights;
use crate::subproblem::{solve_all, SolveAllSetup, SolverOptions};
use crate::types::{ideal_nadir, offset_nonnegative, Dataset, ParetoArchive};

use super::config::{Algorithm, RunConfig};

/// One evaluated design, in problem units.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub iteration: usize,
    pub eval_index: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub hv_after: f64,
    pub log_hv_diff_after: f64,
    pub wall_ms: u64,
}

/// Diagnostics of one optimization iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub n_solved: usize,
    pub n_feasible: usize,
    pub pool_size: usize,
    pub pool_origins: usize,
    pub origins: Vec<usize>,
    pub balance_spread: Vec<usize>,
    pub reintroductions: usize,
    /// Points added by uncertainty sampling because the pool ran short.
    pub filled: usize,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<EvalRecord>,
    pub iterations: Vec<IterationTrace>,
    /// Iteration and message of the error that stopped this seed.
    pub failure: Option<(usize, String)>,
}

impl SeedRun {
    pub fn final_hv(&self) -> Option<f64> {
        self.records.last().map(|r| r.hv_after)
    }

    pub fn final_log_hv_diff(&self) -> Option<f64> {
        self.records.last().map(|r| r.log_hv_diff_after)
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::from_pairs(
            self.records.iter().map(|r| r.x.clone()).collect(),
            self.records.iter().map(|r| r.f.clone()).collect(),
        )
        .expect("records are consistent")
    }
}

/// Scrambled Halton design of the problem box, evaluated.
pub fn initial_design(problem: &Problem, init_count: usize, seed: u64) -> Result<Dataset> {
    if init_count < problem.n_obj + 1 {
        return Err(Error::InvalidConfig(format!(
            "initial design needs at least {} points",
            problem.n_obj + 1
        )));
    }
    let mut data = Dataset::new();
    for u in scrambled_halton(init_count, problem.dim, derive_seed(seed, &[0x1d])) {
        let x = problem.from_unit(&u);
        let y = problem.evaluate(&x)?;
        data.push(x, y)?;
    }
    Ok(data)
}

struct Recorder<'a> {
    problem: &'a Problem,
    hv_max: f64,
    archive: ParetoArchive,
    records: Vec<EvalRecord>,
    start: Instant,
    timing: bool,
}

impl<'a> Recorder<'a> {
    fn new(problem: &'a Problem, timing: bool) -> Self {
        Self {
            problem,
            hv_max: problem.hv_max().unwrap_or(f64::NAN),
            archive: ParetoArchive::new(),
            records: Vec::new(),
            start: Instant::now(),
            timing,
        }
    }

    fn push(&mut self, iteration: usize, x: Vec<f64>, f: Vec<f64>) {
        self.archive.insert(x.clone(), f.clone());
        let hv = hypervolume(self.archive.front(), &self.problem.ref_point);
        self.records.push(EvalRecord {
            iteration,
            eval_index: self.records.len(),
            x,
            f,
            hv_after: hv,
            log_hv_diff_after: log_gap(hv, self.hv_max),
            wall_ms: if self.timing {
                self.start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
    }
}

/// Every this many iterations all multistart candidates are refined, not
/// just the best one.
pub const FULL_REFIT_EVERY: usize = 10;

/// Surrogate-fit settings for `iteration` (1-based) of the loop.
pub fn loop_fit_options(iteration: usize) -> FitOptions {
    let full = iteration == 1 || iteration.is_multiple_of(FULL_REFIT_EVERY);
    FitOptions {
        n_starts: 4,
        n_refine: if full { 4 } else { 1 },
        max_iter: 60,
        ..FitOptions::default()
    }
}

/// Runs one seed of the configured algorithm. Errors stop the seed and are
/// reported in [`SeedRun::failure`]; evaluations made so far are kept.
pub fn run_seed(config: &RunConfig, problem: &Problem, seed: u64) -> SeedRun {
    let mut rec = Recorder::new(problem, config.timing);
    let mut iterations = Vec::new();
    let failure = match config.algo {
        Algorithm::Random => random_search(problem, config.budget, seed).map(|data| {
            for (i, (x, y)) in data.iter().enumerate() {
                rec.push(i, x.clone(), y.clone());
            }
        }),
        Algorithm::Nbi => {
            nbi_run_detailed(problem, config.budget, config.n_beta, seed).map(|rep| {
                for ((x, y), stage) in rep.data.iter().zip(&rep.stage) {
                    rec.push(*stage, x.clone(), y.clone());
                }
            })
        }
        Algorithm::MoboOsd => mobo_osd_loop(config, problem, seed, &mut rec, &mut iterations),
    }
    .err()
    .map(|e| (iterations.len() + 1, e.to_string()));
    SeedRun {
        seed,
        records: rec.records,
        iterations,
        failure,
    }
}

fn mobo_osd_loop(
    config: &RunConfig,
    problem: &Problem,
    seed: u64,
    rec: &mut Recorder<'_>,
    trace: &mut Vec<IterationTrace>,
) -> Result<()> {
    let init = initial_design(problem, config.init_count_for(problem), seed)?;
    for (x, y) in init.iter() {
        rec.push(0, x.clone(), y.clone());
    }
    let mut data = init;
    let mut unit_x: Vec<Vec<f64>> = data.xs().iter().map(|x| problem.to_unit(x)).collect();
    let dim = problem.dim;
    let lower = vec![0.0; dim];
    let upper = vec![1.0; dim];
    let weights = riesz_weights(problem.n_obj, config.n_beta, seed);
    let mut warm: Option<Vec<KernelParams>> = None;
    let mut iteration = 0usize;

    while data.len() < config.budget {
        iteration += 1;
        let it = iteration as u64;
        let (shifted, offset) = offset_nonnegative(&data);
        let r: Vec<f64> = problem
            .ref_point
            .iter()
            .zip(&offset)
            .map(|(a, b)| a + b)
            .collect();
        let (ideal, nadir) = ideal_nadir(&shifted)?;
        let frame = build_frame(&ideal, &nadir)?;

        let fit = FitOptions {
            seed: derive_seed(seed, &[0x6f, it]),
            ..loop_fit_options(iteration)
        };
        let models = Surrogate::fit(&unit_x, shifted.ys(), fit.seed, &fit, warm.as_deref())?;
        warm = Some(models.params());

        let train_mu: Vec<Vec<f64>> = unit_x.iter().map(|x| models.mean(x)).collect();
        let setup = SolveAllSetup {
            lower: &lower,
            upper: &upper,
            train_x: &unit_x,
            train_mu: &train_mu,
            n_starts: config.n_s,
            seed,
            iteration: it,
            solver: SolverOptions {
                delta: config.delta,
                ..SolverOptions::default()
            },
        };
        let solved = solve_all(&models, &frame, &weights, &setup)?;

        let mut pool = CandidatePool::new();
        for res in &solved {
            if config.pfe {
                let space =
                    exploration_directions(&models, &res.x_osd, &lower, &upper, res.beta_index);
                let pts = sample_pfe(
                    &space,
                    config.n_e,
                    config.pfe_scale,
                    &lower,
                    &upper,
                    derive_seed(seed, &[0x9f, it]),
                );
                for p in pts {
                    pool.insert(p, res.beta_index);
                }
            } else {
                pool.insert(res.x_osd.clone(), res.beta_index);
            }
        }
        pool.exclude(&unit_x);

        let b_now = config.batch.min(config.budget - data.len());
        let front: Vec<Vec<f64>> = shifted.pareto_archive().front().to_vec();
        let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(b_now);
        let mut tr = IterationTrace {
            iteration,
            n_solved: solved.len(),
            n_feasible: solved.iter().filter(|s| s.is_feasible()).count(),
            pool_size: pool.len(),
            pool_origins: pool.n_origins(),
            origins: vec![],
            balance_spread: vec![],
            reintroductions: 0,
            filled: 0,
        };
        let mut conditioned = models.clone();
        if !pool.is_empty() {
            let sel = select_batch(&pool, &models, &front, b_now, &r)?;
            tr.origins = sel.origins.clone();
            tr.balance_spread = sel.balance_spread.clone();
            tr.reintroductions = sel.reintroductions;
            chosen = sel.points;
            conditioned = sel.conditioned;
        }
        if chosen.len() < b_now {
            let mut exclude = unit_x.clone();
            exclude.extend(chosen.iter().cloned());
            let extra = fill_by_uncertainty(
                &conditioned,
                b_now - chosen.len(),
                &lower,
                &upper,
                &exclude,
                derive_seed(seed, &[0xf1, it]),
            )?;
            tr.filled = extra.len();
            chosen.extend(extra);
        }
        if chosen.is_empty() {
            return Err(Error::EmptyPool);
        }
        for u in chosen {
            let x = problem.from_unit(&u);
            let y = problem.evaluate(&x)?;
            data.push(x.clone(), y.clone())?;
            unit_x.push(u);
            rec.push(iteration, x, y);
        }
        trace.push(tr);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_design_examples() {
        let p = Problem::by_name("dtlz2-m2").unwrap();
        let cfg = RunConfig::default();
        assert_eq!(cfg.init_count_for(&p), 12);
        let d = initial_design(&p, 6, 3).unwrap();
        assert_eq!(d.len(), 6);
        assert_eq!(d, initial_design(&p, 6, 3).unwrap());
        assert!(initial_design(&p, 2, 3).is_err());
    }

    #[test]
    fn short_run_has_expected_shape() {
        let cfg = RunConfig {
            budget: 30,
            batch: 4,
            init_count: Some(10),
            n_beta: 6,
            ..RunConfig::default()
        };
        let p = cfg.validate().unwrap();
        let run = run_seed(&cfg, &p, 1);
        assert!(run.failure.is_none(), "{:?}", run.failure);
        assert_eq!(run.records.len(), 30);
        assert_eq!(run.iterations.len(), 5);
        for w in run.records.windows(2) {
            assert!(w[1].log_hv_diff_after <= w[0].log_hv_diff_after);
        }
        assert!(run
            .records
            .iter()
            .all(|r| r.x.iter().all(|v| (0.0..=1.0).contains(v))));
        assert!(run
            .iterations
            .iter()
            .flat_map(|t| &t.balance_spread)
            .all(|&s| s <= 1));
    }
}
