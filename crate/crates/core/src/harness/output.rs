//! CSV logs of a run: one file per seed plus failures, a cross-seed summary
//! and final front metrics.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::report;
use crate::problems::Problem;

use super::config::RunConfig;
use super::engine::{run_seed, SeedRun};

/// Reference-front size used for the distance indicators in `metrics.csv`.
pub const METRIC_FRONT_SAMPLES: usize = 1000;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub runs: Vec<SeedRun>,
}

impl RunOutcome {
    pub fn failures(&self) -> impl Iterator<Item = (u64, &(usize, String))> {
        self.runs
            .iter()
            .filter_map(|r| r.failure.as_ref().map(|f| (r.seed, f)))
    }
}

/// Runs every configured seed (in parallel) and writes the CSV logs into
/// `config.out_dir`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let problem = config.validate()?;
    let runs: Vec<SeedRun> = config
        .seeds
        .par_iter()
        .map(|&s| run_seed(config, &problem, s))
        .collect();
    write_all(&config.out_dir, &problem, &runs)?;
    Ok(RunOutcome {
        out_dir: config.out_dir.clone(),
        runs,
    })
}

pub fn write_all(dir: &Path, problem: &Problem, runs: &[SeedRun]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in runs {
        write_seed(&dir.join(format!("seed_{}.csv", r.seed)), problem, r)?;
    }
    write_failures(&dir.join("failures.csv"), runs)?;
    write_summary(&dir.join("summary.csv"), runs)?;
    write_metrics(&dir.join("metrics.csv"), problem, runs)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_err)
}

pub fn seed_header(problem: &Problem) -> Vec<String> {
    let mut h = vec!["seed".to_string(), "iteration".into(), "eval_index".into()];
    h.extend((1..=problem.dim).map(|i| format!("x{i}")));
    h.extend((1..=problem.n_obj).map(|i| format!("f{i}")));
    h.extend([
        "hv_after".into(),
        "log_hv_diff_after".into(),
        "wall_ms".into(),
    ]);
    h
}

pub fn write_seed(path: &Path, problem: &Problem, run: &SeedRun) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(seed_header(problem)).map_err(csv_err)?;
    for r in &run.records {
        let mut row = vec![
            run.seed.to_string(),
            r.iteration.to_string(),
            r.eval_index.to_string(),
        ];
        row.extend(r.x.iter().chain(&r.f).map(|&v| num(v)));
        row.extend([
            num(r.hv_after),
            num(r.log_hv_diff_after),
            r.wall_ms.to_string(),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_failures(path: &Path, runs: &[SeedRun]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["seed", "iteration", "evaluations", "error"])
        .map_err(csv_err)?;
    for r in runs {
        if let Some((it, msg)) = &r.failure {
            w.write_record([
                r.seed.to_string(),
                it.to_string(),
                r.records.len().to_string(),
                msg.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error of the mean; the error is zero for one sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn write_summary(path: &Path, runs: &[SeedRun]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "eval_index",
        "n_seeds",
        "hv_mean",
        "hv_se",
        "log_hv_diff_mean",
        "log_hv_diff_se",
    ])
    .map_err(csv_err)?;
    let longest = runs.iter().map(|r| r.records.len()).max().unwrap_or(0);
    for i in 0..longest {
        let at: Vec<_> = runs.iter().filter_map(|r| r.records.get(i)).collect();
        let hv: Vec<f64> = at.iter().map(|r| r.hv_after).collect();
        let lg: Vec<f64> = at.iter().map(|r| r.log_hv_diff_after).collect();
        let (hm, hs) = mean_se(&hv);
        let (lm, ls) = mean_se(&lg);
        w.write_record([
            i.to_string(),
            at.len().to_string(),
            num(hm),
            num(hs),
            num(lm),
            num(ls),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_metrics(path: &Path, problem: &Problem, runs: &[SeedRun]) -> Result<()> {
    let reference = problem.true_front_samples(METRIC_FRONT_SAMPLES).ok();
    let hv_max = problem.hv_max().unwrap_or(f64::NAN);
    let mut w = writer(path)?;
    w.write_record([
        "seed",
        "evaluations",
        "hv",
        "log_hv_diff",
        "igd",
        "igd_plus",
        "eps",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in runs {
        let front = r.dataset().pareto_archive().front().to_vec();
        let m = report(
            &front,
            &problem.ref_point,
            hv_max,
            reference.as_deref(),
            r.records.len(),
        );
        w.write_record([
            r.seed.to_string(),
            m.eval_count.to_string(),
            num(m.hv),
            num(m.log_hv_diff),
            opt(m.igd),
            opt(m.igd_plus),
            opt(m.eps),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
