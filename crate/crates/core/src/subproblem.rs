//! The per-direction constrained subproblem: push the posterior mean as far
//! as possible along a search line while keeping the line inside the
//! `δ`-confidence band of every objective.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{lambda_gamma, ChimFrame, OsdLine};
use crate::gp::Surrogate;
use crate::hypervolume::hvc;
use crate::optim::{lbfgs_box, LbfgsOptions};
use crate::sampling::{derive_seed, scrambled_halton};
use crate::simplex::WeightSet;

/// Constraint values at or above this are treated as satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub delta: f64,
    /// Augmented-Lagrangian outer iterations.
    pub max_outer: usize,
    /// Inner L-BFGS iterations per outer iteration.
    pub max_inner: usize,
    pub grad_tol: f64,
    /// Multiplies objective-space quantities so the problem is well scaled.
    pub scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            delta: 1.96,
            max_outer: 5,
            max_inner: 20,
            grad_tol: 1e-6,
            scale: 1.0,
        }
    }
}

/// Outcome of one local solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub dist: f64,
    /// Smallest constraint value (negative when violated).
    pub residual: f64,
}

impl Candidate {
    pub fn is_feasible(&self) -> bool {
        self.residual >= -FEASIBILITY_TOL
    }
}

/// The chosen solution for one search direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub x_osd: Vec<f64>,
    pub lambda: f64,
    pub dist: f64,
    pub beta_index: usize,
    pub feasibility_residual: f64,
    /// Every local solution that competed in the selection.
    pub candidates: Vec<Candidate>,
    /// Index into `candidates` of the chosen one.
    pub selected: usize,
}

impl SubproblemResult {
    pub fn is_feasible(&self) -> bool {
        self.feasibility_residual >= -FEASIBILITY_TOL
    }
}

/// `g1 = γ − μ + δσ` and `g2 = μ + δσ − γ`.
pub fn constraints(
    models: &Surrogate,
    x: &[f64],
    line: &OsdLine,
    delta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (mu, sigma) = models.posterior(x);
    constraints_from(&mu, &sigma, line, delta)
}

pub fn constraints_from(
    mu: &[f64],
    sigma: &[f64],
    line: &OsdLine,
    delta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let pr = lambda_gamma(mu, line);
    let g1 = (0..mu.len())
        .map(|m| pr.gamma[m] - mu[m] + delta * sigma[m])
        .collect();
    let g2 = (0..mu.len())
        .map(|m| mu[m] + delta * sigma[m] - pr.gamma[m])
        .collect();
    (g1, g2)
}

struct Eval {
    lambda: f64,
    dist: f64,
    cons: Vec<f64>,
    grad_lambda: Vec<f64>,
    grad_cons: Vec<Vec<f64>>,
}

fn evaluate(models: &Surrogate, line: &OsdLine, delta: f64, x: &[f64]) -> Eval {
    let pe = models.posterior_derivs(x, 1);
    let m = pe.mu.len();
    let dim = x.len();
    let pr = lambda_gamma(&pe.mu, line);
    let n = &line.normal;
    let grad_lambda: Vec<f64> = (0..dim)
        .map(|d| (0..m).map(|k| n[k] * pe.jac_mu[k][d]).sum())
        .collect();
    let mut cons = Vec::with_capacity(2 * m);
    let mut grad_cons = Vec::with_capacity(2 * m);
    for k in 0..m {
        cons.push(pr.gamma[k] - pe.mu[k] + delta * pe.sigma[k]);
        grad_cons.push(
            (0..dim)
                .map(|d| n[k] * grad_lambda[d] - pe.jac_mu[k][d] + delta * pe.jac_sigma[k][d])
                .collect(),
        );
    }
    for k in 0..m {
        cons.push(pe.mu[k] + delta * pe.sigma[k] - pr.gamma[k]);
        grad_cons.push(
            (0..dim)
                .map(|d| pe.jac_mu[k][d] + delta * pe.jac_sigma[k][d] - n[k] * grad_lambda[d])
                .collect(),
        );
    }
    Eval {
        lambda: pr.lambda,
        dist: pr.dist,
        cons,
        grad_lambda,
        grad_cons,
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Maximizes `λ` subject to `g1, g2 ≥ 0` from each start with an augmented
/// Lagrangian method. Returns one candidate per start whose iterates stayed
/// finite. The best feasible iterate seen is kept, so a feasible start never
/// loses `λ`.
pub fn solve_one(
    models: &Surrogate,
    line: &OsdLine,
    starts: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
    opts: &SolverOptions,
) -> Vec<Candidate> {
    starts
        .iter()
        .filter_map(|s| solve_from(models, line, s, lower, upper, opts))
        .collect()
}

fn solve_from(
    models: &Surrogate,
    line: &OsdLine,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &SolverOptions,
) -> Option<Candidate> {
    let sc = opts.scale;
    let n_cons = 2 * models.n_objectives();
    let mut mult = vec![0.0; n_cons];
    let mut rho = 10.0;
    let mut best: Option<Candidate> = None;
    let mut consider = |x: &[f64], e: &Eval| {
        if !e.lambda.is_finite() || !e.dist.is_finite() {
            return;
        }
        let cand = Candidate {
            x: x.to_vec(),
            lambda: e.lambda,
            dist: e.dist,
            residual: min_of(&e.cons),
        };
        let better = match &best {
            None => true,
            Some(b) => match (cand.is_feasible(), b.is_feasible()) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => cand.lambda > b.lambda,
                (false, false) => cand.residual > b.residual,
            },
        };
        if better {
            best = Some(cand);
        }
    };

    let mut x = start.to_vec();
    for (d, v) in x.iter_mut().enumerate() {
        *v = v.clamp(lower[d], upper[d]);
    }
    let e0 = evaluate(models, line, opts.delta, &x);
    consider(&x, &e0);
    let mut violation = (-min_of(&e0.cons)).max(0.0) * sc;
    let lbfgs = LbfgsOptions {
        max_iter: opts.max_inner,
        grad_tol: opts.grad_tol,
        f_tol: 1e-10,
        memory: 6,
    };
    for _ in 0..opts.max_outer {
        let m_now = mult.clone();
        let r_now = rho;
        let result = lbfgs_box(
            |z| {
                let e = evaluate(models, line, opts.delta, z);
                consider(z, &e);
                let mut f = -sc * e.lambda;
                let mut g: Vec<f64> = e.grad_lambda.iter().map(|v| -sc * v).collect();
                for j in 0..n_cons {
                    let c = sc * e.cons[j];
                    if c <= m_now[j] / r_now {
                        f += -m_now[j] * c + 0.5 * r_now * c * c;
                        let w = (-m_now[j] + r_now * c) * sc;
                        for (gd, gc) in g.iter_mut().zip(&e.grad_cons[j]) {
                            *gd += w * gc;
                        }
                    } else {
                        f -= 0.5 * m_now[j] * m_now[j] / r_now;
                    }
                }
                if !f.is_finite() {
                    return (f64::INFINITY, g);
                }
                (f, g)
            },
            &x,
            lower,
            upper,
            lbfgs,
        );
        x = result.x;
        let e = evaluate(models, line, opts.delta, &x);
        consider(&x, &e);
        let new_violation = (-min_of(&e.cons)).max(0.0) * sc;
        let mut shift = 0.0f64;
        for j in 0..n_cons {
            let updated = (mult[j] - rho * sc * e.cons[j]).max(0.0);
            shift = shift.max((updated - mult[j]).abs());
            mult[j] = updated;
        }
        if new_violation <= FEASIBILITY_TOL * sc && shift < 1e-6 {
            break;
        }
        if new_violation > 0.25 * violation {
            rho *= 10.0;
        }
        violation = new_violation;
    }
    best
}

/// Index of the candidate with the largest hypervolume contribution in the
/// (maximize `λ`, minimize `l`) plane; ties go to the smaller distance, then
/// the lower index.
pub fn hvc_select(candidates: &[(f64, f64)]) -> usize {
    assert!(
        !candidates.is_empty(),
        "hvc_select needs at least one candidate"
    );
    if candidates.len() == 1 {
        return 0;
    }
    let pts: Vec<Vec<f64>> = candidates.iter().map(|&(l, d)| vec![-l, d]).collect();
    let mut r = vec![0.0; 2];
    for k in 0..2 {
        let lo = pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let width = hi - lo;
        r[k] = hi
            + if width > 0.0 {
                0.1 * width
            } else {
                0.1 * hi.abs().max(1.0)
            };
    }
    let contrib: Vec<f64> = (0..pts.len()).map(|i| hvc(&pts, &r, i)).collect();
    let scale = contrib.iter().copied().fold(0.0, f64::max);
    let mut best = 0;
    for i in 1..pts.len() {
        let (a, b) = (contrib[i], contrib[best]);
        let tie = (a - b).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE);
        if (!tie && a > b) || (tie && candidates[i].1 < candidates[best].1) {
            best = i;
        }
    }
    best
}

/// Selects one candidate: feasible ones compete first, infeasible ones only
/// when nothing is feasible. Returns the index into `candidates`.
pub fn select_candidate(candidates: &[Candidate]) -> Option<usize> {
    if candidates.is_empty() {
        return None;
    }
    let feasible: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].is_feasible())
        .collect();
    let pool: Vec<usize> = if feasible.is_empty() {
        (0..candidates.len()).collect()
    } else {
        feasible
    };
    let pairs: Vec<(f64, f64)> = pool
        .iter()
        .map(|&i| (candidates[i].lambda, candidates[i].dist))
        .collect();
    Some(pool[hvc_select(&pairs)])
}

/// Inputs shared by all direction solves of one iteration.
#[derive(Debug, Clone)]
pub struct SolveAllSetup<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    /// Observed inputs and the posterior mean at each of them, used to pick
    /// the warm start closest to each line.
    pub train_x: &'a [Vec<f64>],
    pub train_mu: &'a [Vec<f64>],
    pub n_starts: usize,
    pub seed: u64,
    pub iteration: u64,
    pub solver: SolverOptions,
}

/// Start points for direction `beta_index`: the observed input whose mean is
/// closest to the line, then scrambled Halton points.
pub fn start_points(setup: &SolveAllSetup<'_>, line: &OsdLine, beta_index: usize) -> Vec<Vec<f64>> {
    let dim = setup.lower.len();
    let mut starts = Vec::with_capacity(setup.n_starts);
    let warm = setup
        .train_mu
        .iter()
        .enumerate()
        .map(|(i, mu)| (i, lambda_gamma(mu, line).dist))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    if let Some((i, _)) = warm {
        starts.push(setup.train_x[i].clone());
    }
    let n_rand = setup.n_starts.saturating_sub(starts.len());
    if n_rand > 0 {
        let seed = derive_seed(setup.seed, &[0x05d, setup.iteration, beta_index as u64]);
        for u in scrambled_halton(n_rand, dim, seed) {
            starts.push(
                u.iter()
                    .enumerate()
                    .map(|(d, v)| setup.lower[d] + v * (setup.upper[d] - setup.lower[d]))
                    .collect(),
            );
        }
    }
    starts
}

/// Solves every direction (in parallel) and keeps one result per direction.
/// Directions whose solves all failed are omitted.
pub fn solve_all(
    models: &Surrogate,
    frame: &ChimFrame,
    weights: &WeightSet,
    setup: &SolveAllSetup<'_>,
) -> Result<Vec<SubproblemResult>> {
    if weights.is_empty() {
        return Err(Error::InvalidConfig("no weight vectors".into()));
    }
    let span = frame
        .nadir
        .iter()
        .zip(&frame.ideal)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let solver = SolverOptions {
        scale: if span > 0.0 { 1.0 / span } else { 1.0 },
        ..setup.solver.clone()
    };
    let results: Vec<Option<SubproblemResult>> = weights
        .weights
        .par_iter()
        .enumerate()
        .map(|(bi, beta)| {
            let line = frame.line(beta);
            let starts = start_points(setup, &line, bi);
            let candidates = solve_one(models, &line, &starts, setup.lower, setup.upper, &solver);
            let selected = select_candidate(&candidates)?;
            let c = &candidates[selected];
            Some(SubproblemResult {
                x_osd: c.x.clone(),
                lambda: c.lambda,
                dist: c.dist,
                beta_index: bi,
                feasibility_residual: c.residual,
                candidates,
                selected,
            })
        })
        .collect();
    let results: Vec<SubproblemResult> = results.into_iter().flatten().collect();
    if results.is_empty() {
        return Err(Error::SolveFailed("every search direction failed".into()));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_frame;
    use crate::gp::{FitOptions, GpModel};
    use crate::types::dominates;
    use proptest::prelude::*;

    fn toy_surrogate() -> Surrogate {
        let xs: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
        let f1: Vec<f64> = xs.iter().map(|x| x[0] * x[0]).collect();
        let f2: Vec<f64> = xs.iter().map(|x| (x[0] - 1.0).powi(2)).collect();
        Surrogate::new(vec![
            GpModel::fit(&xs, &f1, &FitOptions::with_seed(1)).unwrap(),
            GpModel::fit(&xs, &f2, &FitOptions::with_seed(2)).unwrap(),
        ])
    }

    #[test]
    fn constraint_identity_and_signs() {
        let s = toy_surrogate();
        let frame = build_frame(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let line = frame.line(&[0.3, 0.7]);
        for x in [0.1, 0.4, 0.77] {
            let (mu, sigma) = s.posterior(&[x]);
            let (g1, g2) = constraints(&s, &[x], &line, 1.96);
            for m in 0..2 {
                assert!((g1[m] + g2[m] - 2.0 * 1.96 * sigma[m]).abs() < 1e-12);
            }
            // A mean on the line leaves both sides at δσ.
            let on_line = lambda_gamma(&mu, &line).gamma;
            let (h1, h2) = constraints_from(&on_line, &sigma, &line, 1.96);
            for m in 0..2 {
                assert!(
                    (h1[m] - 1.96 * sigma[m]).abs() < 1e-12
                        && (h2[m] - 1.96 * sigma[m]).abs() < 1e-12
                );
            }
            // Without uncertainty an off-line mean violates something.
            let (z1, z2) = constraints_from(&[mu[0] + 0.1, mu[1]], &[0.0, 0.0], &line, 1.96);
            assert!(z1.iter().chain(&z2).any(|v| *v < 0.0));
        }
    }

    #[test]
    fn central_direction_finds_the_symmetric_point() {
        let s = toy_surrogate();
        let frame = build_frame(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let line = frame.line(&[0.5, 0.5]);
        let starts = vec![vec![0.1], vec![0.35], vec![0.8], vec![0.95]];
        let cands = solve_one(
            &s,
            &line,
            &starts,
            &[0.0],
            &[1.0],
            &SolverOptions::default(),
        );
        assert_eq!(cands.len(), 4);
        let best = select_candidate(&cands).unwrap();
        assert!((cands[best].x[0] - 0.5).abs() < 0.1, "{:?}", cands[best]);
        assert!(cands[best].is_feasible());
    }

    #[test]
    fn huge_delta_never_loses_lambda() {
        let s = toy_surrogate();
        let frame = build_frame(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let line = frame.line(&[0.2, 0.8]);
        let starts = vec![vec![0.05], vec![0.5], vec![0.9]];
        let opts = SolverOptions {
            delta: 1e9,
            ..SolverOptions::default()
        };
        let cands = solve_one(&s, &line, &starts, &[0.0], &[1.0], &opts);
        for (c, x0) in cands.iter().zip(&starts) {
            let start_lambda = lambda_gamma(&s.posterior(x0).0, &line).lambda;
            assert!(c.lambda >= start_lambda - 1e-12);
        }
    }

    #[test]
    fn feasible_optimal_start_is_kept() {
        let s = toy_surrogate();
        let frame = build_frame(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let line = frame.line(&[0.5, 0.5]);
        let first = solve_one(
            &s,
            &line,
            &[vec![0.3]],
            &[0.0],
            &[1.0],
            &SolverOptions::default(),
        );
        let again = solve_one(
            &s,
            &line,
            &[first[0].x.clone()],
            &[0.0],
            &[1.0],
            &SolverOptions::default(),
        );
        assert!(first[0].is_feasible());
        assert!(again[0].lambda >= first[0].lambda);
    }

    #[test]
    fn hvc_selection_examples() {
        assert_eq!(hvc_select(&[(0.3, 0.2)]), 0);
        assert_eq!(hvc_select(&[(1.0, 0.0), (0.5, 0.5)]), 0);
        assert_eq!(hvc_select(&[(2.0, 1.0), (1.0, 0.0)]), 1);
        // Identical pairs fall back to the lowest index.
        assert_eq!(hvc_select(&[(1.0, 1.0), (1.0, 1.0)]), 0);
        // Equal distances, different λ: the larger λ wins.
        assert_eq!(hvc_select(&[(1.0, 0.5), (2.0, 0.5)]), 1);
    }

    #[test]
    fn feasible_candidates_are_preferred() {
        let c = |lambda, residual| Candidate {
            x: vec![0.0],
            lambda,
            dist: 0.0,
            residual,
        };
        assert_eq!(select_candidate(&[c(5.0, -1.0), c(1.0, 0.0)]), Some(1));
        assert_eq!(select_candidate(&[c(5.0, -1.0), c(1.0, -2.0)]), Some(0));
        assert_eq!(select_candidate(&[]), None);
    }

    #[test]
    fn solve_all_covers_every_direction() {
        let s = toy_surrogate();
        let frame = build_frame(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let xs: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
        let mus: Vec<Vec<f64>> = xs.iter().map(|x| s.mean(x)).collect();
        let setup = SolveAllSetup {
            lower: &[0.0],
            upper: &[1.0],
            train_x: &xs,
            train_mu: &mus,
            n_starts: 4,
            seed: 3,
            iteration: 0,
            solver: SolverOptions::default(),
        };
        let one = WeightSet {
            weights: vec![vec![0.5, 0.5]],
        };
        assert_eq!(solve_all(&s, &frame, &one, &setup).unwrap().len(), 1);
        let dup = WeightSet {
            weights: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let res = solve_all(&s, &frame, &dup, &setup).unwrap();
        assert_eq!(
            res.iter().map(|r| r.beta_index).collect::<Vec<_>>(),
            vec![0, 1]
        );
        let again = solve_all(&s, &frame, &dup, &setup).unwrap();
        assert_eq!(res, again);
        // The warm start is the observed point whose mean sits on the line.
        let starts = start_points(&setup, &frame.line(&[0.5, 0.5]), 0);
        assert_eq!(starts.len(), 4);
        assert_eq!(starts[0], vec![0.5]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn selected_pair_is_nondominated(pairs in proptest::collection::vec((-2.0f64..2.0, 0.0f64..2.0), 1..10)) {
            let i = hvc_select(&pairs);
            let me = [-pairs[i].0, pairs[i].1];
            for p in &pairs {
                prop_assert!(!dominates(&[-p.0, p.1], &me).unwrap());
            }
        }
    }
}
