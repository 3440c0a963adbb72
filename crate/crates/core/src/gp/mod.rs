//! Gaussian-process surrogates, one independent model per objective.
//!
//! Outputs are z-scored internally; every public posterior quantity is
//! reported in the caller's units. Inputs are used as given and are
//! expected to live in the unit box.

pub mod kernel;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::optim::{lbfgs_box, LbfgsOptions};
use crate::sampling::stream;
pub use kernel::KernelParams;

const JITTERS: [f64; 8] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Hyperparameter search settings.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub seed: u64,
    /// Number of initial parameter vectors (the warm start counts as one).
    pub n_starts: usize,
    /// How many of the best-scoring starts are refined by the optimizer.
    pub n_refine: usize,
    pub max_iter: usize,
    pub warm_start: Option<KernelParams>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_starts: 4,
            n_refine: 4,
            max_iter: 60,
            warm_start: None,
        }
    }
}

impl FitOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Posterior mean and standard deviation of a single model together with
/// their gradients and, optionally, the mean Hessian (row-major `D×D`).
#[derive(Debug, Clone)]
pub struct PointDerivs {
    pub mu: f64,
    pub sigma: f64,
    pub grad_mu: Vec<f64>,
    pub grad_sigma: Vec<f64>,
    pub hess_mu: Option<Vec<f64>>,
}

/// A fitted single-output GP.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    inv_ls2: Vec<f64>,
    train_x: Vec<Vec<f64>>,
    train_y: DVector<f64>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_std: f64,
    jitter: f64,
}

fn standardize(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        (mean, 1.0)
    } else {
        (mean, std)
    }
}

fn validate(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} training points, need at least 2",
            x.len()
        )));
    }
    let dim = x[0].len();
    for xi in x {
        if xi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: xi.len(),
            });
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training inputs".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training targets".into()));
    }
    Ok(dim)
}

/// Squared coordinate differences for every unordered pair `i < j`.
struct PairTable {
    n: usize,
    dim: usize,
    sq: Vec<f64>,
}

impl PairTable {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let dim = x[0].len();
        let mut sq = Vec::with_capacity(n * (n - 1) / 2 * dim);
        for i in 0..n {
            for j in (i + 1)..n {
                for d in 0..dim {
                    let t = x[i][d] - x[j][d];
                    sq.push(t * t);
                }
            }
        }
        Self { n, dim, sq }
    }
}

/// Cholesky of `K + (noise + jitter)·I`, escalating the jitter on failure.
fn factor(
    mut k: DMatrix<f64>,
    floor: f64,
) -> Option<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    let n = k.nrows();
    let mut applied = 0.0;
    for &j in JITTERS.iter().filter(|&&j| j == 0.0 || j >= floor) {
        for i in 0..n {
            k[(i, i)] += j - applied;
        }
        applied = j;
        if let Some(c) = nalgebra::Cholesky::new(k.clone()) {
            return Some((c, j));
        }
    }
    None
}

/// Negative log marginal likelihood and its gradient in log-parameter space.
fn neg_lml(table: &PairTable, y: &DVector<f64>, theta: &[f64]) -> (f64, Vec<f64>) {
    let (n, dim) = (table.n, table.dim);
    let inv_ls2: Vec<f64> = theta[..dim].iter().map(|t| (-2.0 * t).exp()).collect();
    let sf2 = (2.0 * theta[dim]).exp();
    let sn2 = theta[dim + 1].exp();
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut p = 0;
    for i in 0..n {
        k[(i, i)] = sf2 + sn2;
        for j in (i + 1)..n {
            let r2: f64 = (0..dim).map(|d| table.sq[p * dim + d] * inv_ls2[d]).sum();
            let v = kernel::value_at(sf2, r2.sqrt());
            k[(i, j)] = v;
            k[(j, i)] = v;
            p += 1;
        }
    }
    let kf = k.clone();
    let Some((chol, _)) = factor(k, 0.0) else {
        return (f64::INFINITY, vec![0.0; dim + 2]);
    };
    let alpha = chol.solve(y);
    let l = chol.l_dirty();
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;
    let kinv = chol.inverse();

    let sqrt5 = 5f64.sqrt();
    let mut grad = vec![0.0; dim + 2];
    let mut p = 0;
    for i in 0..n {
        let w_ii = alpha[i] * alpha[i] - kinv[(i, i)];
        grad[dim] += w_ii * sf2;
        grad[dim + 1] += 0.5 * w_ii * sn2;
        for j in (i + 1)..n {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let r2: f64 = (0..dim).map(|d| table.sq[p * dim + d] * inv_ls2[d]).sum();
            let r = r2.sqrt();
            let c = (5.0 / 3.0) * sf2 * (1.0 + sqrt5 * r) * (-sqrt5 * r).exp();
            for d in 0..dim {
                grad[d] += w * c * table.sq[p * dim + d] * inv_ls2[d];
            }
            grad[dim] += 2.0 * w * kf[(i, j)];
            p += 1;
        }
    }
    (-lml, grad.into_iter().map(|g| -g).collect())
}

/// Initial log-parameter vectors scored by [`GpModel::fit`]: the warm start
/// (or a fixed default) followed by seeded random draws.
pub(crate) fn start_points(dim: usize, n_train: usize, opts: &FitOptions) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(opts.n_starts.max(1));
    starts.push(match &opts.warm_start {
        Some(w) if w.dim() == dim => w.clamped().to_log(),
        _ => KernelParams::new(vec![0.5; dim], 1.0, 1e-3)
            .clamped()
            .to_log(),
    });
    let mut rng = stream(opts.seed, &[0x6770, n_train as u64]);
    while starts.len() < opts.n_starts.max(1) {
        let mut t: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(0.1f64.ln()..2f64.ln()))
            .collect();
        t.push(rng.random_range(0.5f64.ln()..2f64.ln()));
        t.push(rng.random_range(1e-6f64.ln()..1e-4f64.ln()));
        starts.push(t);
    }

    starts
}

impl GpModel {
    /// Fits hyperparameters by multistart maximization of the log marginal
    /// likelihood. Every start is scored; the best `n_refine` are optimized.
    pub fn fit(x: &[Vec<f64>], y: &[f64], opts: &FitOptions) -> Result<Self> {
        let dim = validate(x, y)?;
        let (y_mean, y_std) = standardize(y);
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_std));
        let table = PairTable::new(x);
        let (lo, hi) = KernelParams::log_bounds(dim);

        let starts = start_points(dim, x.len(), opts);
        let mut scored: Vec<(f64, Vec<f64>)> = starts
            .into_iter()
            .map(|t| (neg_lml(&table, &ys, &t).0, t))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));

        let lbfgs = LbfgsOptions {
            max_iter: opts.max_iter,
            grad_tol: 1e-5,
            f_tol: 1e-9,
            memory: 8,
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (f0, t0) in scored.iter().take(opts.n_refine.max(1)) {
            let m = if f0.is_finite() {
                let m = lbfgs_box(|t| neg_lml(&table, &ys, t), t0, &lo, &hi, lbfgs);
                (m.f, m.x)
            } else {
                (*f0, t0.clone())
            };
            if m.0.is_finite() && best.as_ref().is_none_or(|b| m.0 < b.0) {
                best = Some(m);
            }
        }
        let (_, theta) = best.ok_or(Error::SingularKernel {
            jitter: JITTERS[JITTERS.len() - 1],
        })?;
        Self::with_params(x, y, KernelParams::from_log(&theta))
    }

    /// Builds the posterior for fixed hyperparameters.
    pub fn with_params(x: &[Vec<f64>], y: &[f64], params: KernelParams) -> Result<Self> {
        let dim = validate(x, y)?;
        if params.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: params.dim(),
            });
        }
        let (y_mean, y_std) = standardize(y);
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_std));
        Self::assemble(x.to_vec(), ys, y_mean, y_std, params, 0.0)
    }

    fn assemble(
        train_x: Vec<Vec<f64>>,
        train_y: DVector<f64>,
        y_mean: f64,
        y_std: f64,
        params: KernelParams,
        min_jitter: f64,
    ) -> Result<Self> {
        let n = train_x.len();
        let inv_ls2: Vec<f64> = params.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let sf2 = params.signal_var();
        let mut k = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = sf2 + params.noise_var();
            for j in (i + 1)..n {
                let v = kernel::value_at(
                    sf2,
                    kernel::scaled_distance(&inv_ls2, &train_x[i], &train_x[j]),
                );
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let (chol, jitter) = factor(k, min_jitter).ok_or(Error::SingularKernel {
            jitter: JITTERS[JITTERS.len() - 1],
        })?;
        let alpha = chol.solve(&train_y);
        Ok(Self {
            params,
            inv_ls2,
            train_x,
            train_y,
            chol: chol.unpack(),
            alpha,
            y_mean,
            y_std,
            jitter,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn train_x(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    /// Training targets in the caller's units.
    pub fn train_y(&self) -> Vec<f64> {
        self.train_y
            .iter()
            .map(|v| v * self.y_std + self.y_mean)
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.inv_ls2.len()
    }

    pub fn n_train(&self) -> usize {
        self.train_x.len()
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    /// Jitter that was added to the diagonal to obtain a factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Prior standard deviation in the caller's units.
    pub fn signal_std(&self) -> f64 {
        self.params.signal_std * self.y_std
    }

    /// Lower Cholesky factor of the (standardized) training covariance.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// The standardized covariance `K + (noise + jitter)·I` that was factored.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n_train();
        let sf2 = self.params.signal_var();
        DMatrix::from_fn(n, n, |i, j| {
            let v = kernel::value_at(
                sf2,
                kernel::scaled_distance(&self.inv_ls2, &self.train_x[i], &self.train_x[j]),
            );
            if i == j {
                v + self.params.noise_var() + self.jitter
            } else {
                v
            }
        })
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.n_train();
        let log_det: f64 = (0..n).map(|i| self.chol[(i, i)].ln()).sum::<f64>() * 2.0;
        -0.5 * self.train_y.dot(&self.alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI
    }

    /// Log marginal likelihood that `params` would attain on this model's
    /// training data (same standardization).
    pub fn log_marginal_likelihood_at(&self, params: &KernelParams) -> f64 {
        let table = PairTable::new(&self.train_x);
        -neg_lml(&table, &self.train_y, &params.to_log()).0
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        let sf2 = self.params.signal_var();
        DVector::from_iterator(
            self.n_train(),
            self.train_x
                .iter()
                .map(|xi| kernel::value_at(sf2, kernel::scaled_distance(&self.inv_ls2, x, xi))),
        )
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let k = self.cross_cov(x);
        let m = k.dot(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&k)
            .expect("nonsingular factor");
        let s2 = (self.params.signal_var() - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_std * m, self.y_std * s2.sqrt())
    }

    /// Posterior mean/std with analytic gradients; `order == 2` also returns
    /// the Hessian of the mean.
    pub fn posterior_derivs(&self, x: &[f64], order: u8) -> PointDerivs {
        let dim = self.dim();
        let n = self.n_train();
        let sf2 = self.params.signal_var();
        let mut k = DVector::<f64>::zeros(n);
        let mut dk = vec![0.0; n * dim];
        for i in 0..n {
            k[i] = kernel::accumulate_grad(
                sf2,
                &self.inv_ls2,
                x,
                &self.train_x[i],
                1.0,
                &mut dk[i * dim..(i + 1) * dim],
            );
        }
        let m = k.dot(&self.alpha);
        let v = self
            .chol
            .solve_lower_triangular(&k)
            .expect("nonsingular factor");
        let s2 = sf2 - v.dot(&v);
        let s = s2.max(0.0).sqrt();

        let mut grad_mu = vec![0.0; dim];
        for i in 0..n {
            for d in 0..dim {
                grad_mu[d] += self.alpha[i] * dk[i * dim + d];
            }
        }
        let mut grad_sigma = vec![0.0; dim];
        if s2 > 0.0 && s > 1e-12 * sf2.sqrt() {
            let w = self
                .chol
                .tr_solve_lower_triangular(&v)
                .expect("nonsingular factor");
            for i in 0..n {
                for d in 0..dim {
                    grad_sigma[d] -= w[i] * dk[i * dim + d];
                }
            }
            for g in grad_sigma.iter_mut() {
                *g *= self.y_std / s;
            }
        }
        let hess_mu = (order >= 2).then(|| {
            let mut h = vec![0.0; dim * dim];
            for i in 0..n {
                kernel::accumulate_hessian(
                    sf2,
                    &self.inv_ls2,
                    x,
                    &self.train_x[i],
                    self.alpha[i],
                    &mut h,
                );
            }
            for v in h.iter_mut() {
                *v *= self.y_std;
            }
            h
        });
        for g in grad_mu.iter_mut() {
            *g *= self.y_std;
        }
        PointDerivs {
            mu: self.y_mean + self.y_std * m,
            sigma: self.y_std * s,
            grad_mu,
            grad_sigma,
            hess_mu,
        }
    }

    /// Adds a pseudo-observation keeping hyperparameters and the output
    /// standardization fixed; the factor is extended by one row.
    pub fn condition_on(&self, x: &[f64], y: f64) -> Result<Self> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pseudo-observation".into()));
        }
        let n = self.n_train();
        let k = self.cross_cov(x);
        let row = self
            .chol
            .solve_lower_triangular(&k)
            .expect("nonsingular factor");
        let diag = self.params.signal_var() + self.params.noise_var() + self.jitter - row.dot(&row);
        let mut train_x = self.train_x.clone();
        train_x.push(x.to_vec());
        let train_y = self
            .train_y
            .clone()
            .insert_row(n, (y - self.y_mean) / self.y_std);
        if !(diag > 1e-14) {
            return Self::assemble(
                train_x,
                train_y,
                self.y_mean,
                self.y_std,
                self.params.clone(),
                self.jitter.max(1e-10),
            );
        }
        let mut chol = self.chol.clone().insert_row(n, 0.0).insert_column(n, 0.0);
        for j in 0..n {
            chol[(n, j)] = row[j];
        }
        chol[(n, n)] = diag.sqrt();
        let z = chol
            .solve_lower_triangular(&train_y)
            .expect("nonsingular factor");
        let alpha = chol
            .tr_solve_lower_triangular(&z)
            .expect("nonsingular factor");
        Ok(Self {
            params: self.params.clone(),
            inv_ls2: self.inv_ls2.clone(),
            train_x,
            train_y,
            chol,
            alpha,
            y_mean: self.y_mean,
            y_std: self.y_std,
            jitter: self.jitter,
        })
    }
}

/// Posterior summary of all objectives at one design point.
#[derive(Debug, Clone)]
pub struct PosteriorEval {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `M` rows of length `D`.
    pub jac_mu: Vec<Vec<f64>>,
    pub jac_sigma: Vec<Vec<f64>>,
    /// Row-major `D×D` mean Hessians, present when second order was requested.
    pub hess_mu: Option<Vec<Vec<f64>>>,
}

/// One GP per objective.
#[derive(Debug, Clone)]
pub struct Surrogate {
    models: Vec<GpModel>,
}

impl Surrogate {
    pub fn new(models: Vec<GpModel>) -> Self {
        Self { models }
    }

    /// Fits one model per objective column. `warm` supplies previous
    /// hyperparameters per objective.
    pub fn fit(
        xs: &[Vec<f64>],
        ys: &[Vec<f64>],
        seed: u64,
        base: &FitOptions,
        warm: Option<&[KernelParams]>,
    ) -> Result<Self> {
        let m = ys
            .first()
            .map(|y| y.len())
            .ok_or(Error::InsufficientData("empty dataset".into()))?;
        let models = (0..m)
            .map(|j| {
                let y: Vec<f64> = ys.iter().map(|v| v[j]).collect();
                let opts = FitOptions {
                    seed: crate::sampling::derive_seed(seed, &[j as u64]),
                    warm_start: warm.and_then(|w| w.get(j).cloned()),
                    ..base.clone()
                };
                GpModel::fit(xs, &y, &opts)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }

    pub fn models(&self) -> &[GpModel] {
        &self.models
    }

    pub fn n_objectives(&self) -> usize {
        self.models.len()
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn params(&self) -> Vec<KernelParams> {
        self.models.iter().map(|m| m.params().clone()).collect()
    }

    pub fn posterior(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.models.iter().map(|m| m.posterior(x)).unzip()
    }

    pub fn mean(&self, x: &[f64]) -> Vec<f64> {
        self.models
            .iter()
            .map(|m| m.cross_cov(x).dot(&m.alpha) * m.y_std + m.y_mean)
            .collect()
    }

    pub fn posterior_derivs(&self, x: &[f64], order: u8) -> PosteriorEval {
        let evals: Vec<PointDerivs> = self
            .models
            .iter()
            .map(|m| m.posterior_derivs(x, order))
            .collect();
        let hess_mu =
            (order >= 2).then(|| evals.iter().map(|e| e.hess_mu.clone().unwrap()).collect());
        PosteriorEval {
            mu: evals.iter().map(|e| e.mu).collect(),
            sigma: evals.iter().map(|e| e.sigma).collect(),
            jac_mu: evals.iter().map(|e| e.grad_mu.clone()).collect(),
            jac_sigma: evals.iter().map(|e| e.grad_sigma.clone()).collect(),
            hess_mu,
        }
    }

    pub fn condition_on(&self, x: &[f64], y: &[f64]) -> Result<Self> {
        if y.len() != self.models.len() {
            return Err(Error::DimensionMismatch {
                expected: self.models.len(),
                got: y.len(),
            });
        }
        let models = self
            .models
            .iter()
            .zip(y)
            .map(|(m, &v)| m.condition_on(x, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }
}
