//! Local minimizers shared by the surrogate fit, the subproblem solver and
//! the baselines: a projected limited-memory BFGS for box constraints and a
//! Nelder-Mead simplex search for derivative-free use.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    /// Stop when the infinity norm of the projected gradient drops below this.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease over one step is below this.
    pub f_tol: f64,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-6,
            f_tol: 1e-12,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `fg` over the box `[lo, hi]`. `fg` returns the objective and
/// its gradient; a non-finite objective is treated as a rejected step.
pub fn lbfgs_box<F>(mut fg: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut f, mut g) = fg(&x);
    let mut evaluations = 1;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    if !f.is_finite() {
        return Minimum {
            x,
            f,
            iterations,
            evaluations,
        };
    }

    while iterations < opts.max_iter {
        let bound_eps = 1e-12;
        let free: Vec<bool> = (0..n)
            .map(|i| {
                !((x[i] <= lo[i] + bound_eps && g[i] > 0.0)
                    || (x[i] >= hi[i] - bound_eps && g[i] < 0.0))
            })
            .collect();
        let pg_norm = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(0.0, f64::max);
        if pg_norm < opts.grad_tol {
            break;
        }
        iterations += 1;

        // Two-loop recursion on the free subspace.
        let mut q: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in q.iter_mut() {
                *v *= gamma;
            }
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (a - b);
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| if free[i] { -q[i] } else { 0.0 }).collect();
        if dot(&d, &g) >= 0.0 {
            d = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            hist.clear();
        }

        let mut t = if hist.is_empty() {
            (1.0 / d.iter().map(|v| v.abs()).fold(0.0, f64::max)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..30 {
            let mut xn: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
            project(&mut xn, lo, hi);
            let step: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
            let decrease = dot(&g, &step);
            if step.iter().all(|v| v.abs() < 1e-16) {
                break;
            }
            let (fnew, gnew) = fg(&xn);
            evaluations += 1;
            if fnew.is_finite() && fnew <= f + 1e-4 * decrease {
                accepted = Some((xn, fnew, gnew, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew, s)) = accepted else {
            if hist.is_empty() {
                break;
            }
            hist.clear();
            continue;
        };
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(1e-300) {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let rel = (f - fnew).abs() / f.abs().max(fnew.abs()).max(1.0);
        x = xn;
        f = fnew;
        g = gnew;
        if rel < opts.f_tol {
            break;
        }
    }
    Minimum {
        x,
        f,
        iterations,
        evaluations,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 500,
            f_tol: 1e-10,
            x_tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

/// Nelder-Mead simplex search. `f` may return `None` to abort the search
/// (for instance when an evaluation budget runs out); the best point seen so
/// far is returned, or `None` if nothing was evaluated.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut call =
        |x: &[f64], evals: &mut usize, best: &mut Option<(Vec<f64>, f64)>| -> Option<f64> {
            let v = f(x)?;
            *evals += 1;
            let v = if v.is_finite() { v } else { f64::INFINITY };
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                *best = Some((x.to_vec(), v));
            }
            Some(v)
        };
    let finish = |best: Option<(Vec<f64>, f64)>, evals: usize, iterations: usize| {
        best.map(|(x, f)| Minimum {
            x,
            f,
            iterations,
            evaluations: evals,
        })
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    match call(x0, &mut evals, &mut best) {
        Some(v) => simplex.push((x0.to_vec(), v)),
        None => return finish(best, evals, 0),
    }
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        match call(&x, &mut evals, &mut best) {
            Some(v) => simplex.push((x, v)),
            None => return finish(best, evals, 0),
        }
    }

    let mut iterations = 0;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[n].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() < opts.f_tol && diam < opts.x_tol {
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let Some(fr) = call(&xr, &mut evals, &mut best) else {
            break;
        };
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let Some(fe) = call(&xe, &mut evals, &mut best) else {
                break;
            };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, outside) = if fr < simplex[n].1 {
                (along(-0.5), true)
            } else {
                (along(0.5), false)
            };
            let Some(fc) = call(&xc, &mut evals, &mut best) else {
                break;
            };
            if (outside && fc <= fr) || (!outside && fc < simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for k in 1..=n {
                    let xs: Vec<f64> = (0..n)
                        .map(|j| x_best[j] + 0.5 * (simplex[k].0[j] - x_best[j]))
                        .collect();
                    let Some(fs) = call(&xs, &mut evals, &mut best) else {
                        return finish(best, evals, iterations);
                    };
                    simplex[k] = (xs, fs);
                }
            }
        }
    }
    finish(best, evals, iterations)
}
