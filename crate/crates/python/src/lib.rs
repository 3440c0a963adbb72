//! Python bindings: front utilities, metrics, the GP surrogate, benchmark
//! problems and the experiment runner.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mobo_osd::gp::{FitOptions, GpModel};
use mobo_osd::harness::{self, Algorithm, RunConfig};
use mobo_osd::problems;

fn err(e: mobo_osd::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn check_ref(points: &[Vec<f64>], r: &[f64]) -> PyResult<()> {
    if points.iter().any(|p| p.len() != r.len()) {
        return Err(PyValueError::new_err(
            "every point must have the reference point's length",
        ));
    }
    Ok(())
}

/// True when `a` Pareto-dominates `b` (minimization).
#[pyfunction]
fn dominates(a: Vec<f64>, b: Vec<f64>) -> PyResult<bool> {
    mobo_osd::dominates(&a, &b).map_err(err)
}

/// Indices of the non-dominated rows.
#[pyfunction]
fn pareto_filter(points: Vec<Vec<f64>>) -> Vec<usize> {
    mobo_osd::pareto_filter(&points)
}

#[pyfunction]
fn hypervolume(front: Vec<Vec<f64>>, r: Vec<f64>) -> PyResult<f64> {
    check_ref(&front, &r)?;
    Ok(mobo_osd::hypervolume::hypervolume(&front, &r))
}

#[pyfunction]
fn hvi(mu: Vec<f64>, front: Vec<Vec<f64>>, r: Vec<f64>) -> PyResult<f64> {
    check_ref(&front, &r)?;
    check_ref(std::slice::from_ref(&mu), &r)?;
    Ok(mobo_osd::hypervolume::hvi(&mu, &front, &r))
}

#[pyfunction]
fn hvc(set: Vec<Vec<f64>>, r: Vec<f64>, index: usize) -> PyResult<f64> {
    check_ref(&set, &r)?;
    if index >= set.len() {
        return Err(PyValueError::new_err("index out of range"));
    }
    Ok(mobo_osd::hypervolume::hvc(&set, &r, index))
}

/// Well-spread weight vectors on the simplex.
#[pyfunction]
#[pyo3(signature = (m, n_beta, seed = 0))]
fn riesz_weights(m: usize, n_beta: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    if m == 0 || n_beta == 0 {
        return Err(PyValueError::new_err("m and n_beta must be positive"));
    }
    Ok(mobo_osd::simplex::riesz_weights(m, n_beta, seed).weights)
}

/// HV, log10 HV gap and, given a reference front, IGD / IGD+ / epsilon.
#[pyfunction]
#[pyo3(signature = (front, r, hv_max, reference = None))]
fn metrics<'py>(
    py: Python<'py>,
    front: Vec<Vec<f64>>,
    r: Vec<f64>,
    hv_max: f64,
    reference: Option<Vec<Vec<f64>>>,
) -> PyResult<Bound<'py, PyDict>> {
    check_ref(&front, &r)?;
    let rep = mobo_osd::metrics::report(&front, &r, hv_max, reference.as_deref(), front.len());
    let d = PyDict::new(py);
    d.set_item("hv", rep.hv)?;
    d.set_item("log_hv_diff", rep.log_hv_diff)?;
    d.set_item("igd", rep.igd)?;
    d.set_item("igd_plus", rep.igd_plus)?;
    d.set_item("eps", rep.eps)?;
    Ok(d)
}

/// Runs an experiment, writes its CSV logs and returns one dict per seed.
#[pyfunction]
#[pyo3(signature = (problem, algo = "mobo-osd", budget = 200, batch = 1, n_beta = 20, seeds = vec![0], out = None, pfe = true, init = None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    problem: &str,
    algo: &str,
    budget: usize,
    batch: usize,
    n_beta: usize,
    seeds: Vec<u64>,
    out: Option<PathBuf>,
    pfe: bool,
    init: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let algo: Algorithm = algo.parse().map_err(err)?;
    let mut cfg = RunConfig {
        problem: problem.to_string(),
        algo,
        budget,
        batch,
        n_beta,
        seeds,
        pfe,
        init_count: init,
        ..RunConfig::default()
    };
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    let outcome = py.detach(|| harness::run(&cfg)).map_err(err)?;
    outcome
        .runs
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("seed", r.seed)?;
            d.set_item("evaluations", r.records.len())?;
            d.set_item("hv", r.final_hv())?;
            d.set_item("log_hv_diff", r.final_log_hv_diff())?;
            d.set_item("failure", r.failure.as_ref().map(|(_, m)| m.clone()))?;
            d.set_item(
                "x",
                r.records.iter().map(|e| e.x.clone()).collect::<Vec<_>>(),
            )?;
            d.set_item(
                "f",
                r.records.iter().map(|e| e.f.clone()).collect::<Vec<_>>(),
            )?;
            Ok(d)
        })
        .collect()
}

/// Matérn-5/2 GP with hyperparameters fitted by marginal likelihood.
/// Inputs are expected in the unit box.
#[pyclass(name = "GaussianProcess", module = "mobo_osd_py", frozen)]
struct PyGaussianProcess {
    inner: GpModel,
}

#[pymethods]
impl PyGaussianProcess {
    #[new]
    #[pyo3(signature = (x, y, seed = 0))]
    fn new(x: Vec<Vec<f64>>, y: Vec<f64>, seed: u64) -> PyResult<Self> {
        let inner = GpModel::fit(&x, &y, &FitOptions::with_seed(seed)).map_err(err)?;
        Ok(Self { inner })
    }

    /// Posterior mean and standard deviation at each row of `x`.
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        if x.iter().any(|r| r.len() != self.inner.dim()) {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        Ok(x.iter().map(|r| self.inner.posterior(r)).unzip())
    }

    /// `(mu, sigma, grad_mu, grad_sigma)` at one point.
    fn gradients(&self, x: Vec<f64>) -> PyResult<(f64, f64, Vec<f64>, Vec<f64>)> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        let d = self.inner.posterior_derivs(&x, 1);
        Ok((d.mu, d.sigma, d.grad_mu, d.grad_sigma))
    }

    fn log_marginal_likelihood(&self) -> f64 {
        self.inner.log_marginal_likelihood()
    }

    #[getter]
    fn lengthscales(&self) -> Vec<f64> {
        self.inner.params().lengthscales.clone()
    }

    #[getter]
    fn signal_std(&self) -> f64 {
        self.inner.params().signal_std
    }

    #[getter]
    fn noise_std(&self) -> f64 {
        self.inner.params().noise_std
    }
}

/// A benchmark problem by name.
#[pyclass(name = "Problem", module = "mobo_osd_py", frozen)]
struct PyProblem {
    inner: problems::Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        let inner = problems::Problem::by_name(name).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn names() -> Vec<&'static str> {
        problems::PROBLEM_NAMES.to_vec()
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.inner.dim {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        self.inner.evaluate(&x).map_err(err)
    }

    fn true_front(&self, n: usize) -> PyResult<Vec<Vec<f64>>> {
        self.inner.true_front_samples(n).map_err(err)
    }

    fn hv_max(&self) -> Option<f64> {
        self.inner.hv_max()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn n_obj(&self) -> usize {
        self.inner.n_obj
    }

    #[getter]
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.inner.lower.clone(), self.inner.upper.clone())
    }

    #[getter]
    fn ref_point(&self) -> Vec<f64> {
        self.inner.ref_point.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem('{}', dim={}, n_obj={})",
            self.inner.name, self.inner.dim, self.inner.n_obj
        )
    }
}

#[pymodule]
fn mobo_osd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(dominates, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_filter, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(hvi, m)?)?;
    m.add_function(wrap_pyfunction!(hvc, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_weights, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_class::<PyGaussianProcess>()?;
    m.add_class::<PyProblem>()?;
    Ok(())
}
