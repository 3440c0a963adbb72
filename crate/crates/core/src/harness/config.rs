//! Run configuration and its flat `key = value` file format.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    MoboOsd,
    Random,
    Nbi,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mobo-osd" | "mobo_osd" | "moboosd" => Ok(Self::MoboOsd),
            "random" => Ok(Self::Random),
            "nbi" => Ok(Self::Nbi),
            other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MoboOsd => "mobo-osd",
            Self::Random => "random",
            Self::Nbi => "nbi",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub algo: Algorithm,
    pub budget: usize,
    pub batch: usize,
    pub n_beta: usize,
    pub delta: f64,
    pub n_s: usize,
    pub n_e: usize,
    pub pfe_scale: f64,
    /// Expand subproblem solutions locally before batch selection.
    pub pfe: bool,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Initial design size; `None` means `2·(D + 1)`.
    pub init_count: Option<usize>,
    /// Write elapsed wall-clock milliseconds instead of zeros.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "dtlz2-m2".into(),
            algo: Algorithm::MoboOsd,
            budget: 200,
            batch: 1,
            n_beta: 20,
            delta: 1.96,
            n_s: 4,
            n_e: 10,
            pfe_scale: 0.05,
            pfe: true,
            seeds: vec![0],
            out_dir: PathBuf::from("runs"),
            init_count: None,
            timing: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value for {key}: '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "bad value for {key}: '{value}'"
        ))),
    }
}

/// Parses `1,2,5` or a range `0..5` (exclusive end).
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let v = value.trim();
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (parse("seeds", a)?, parse("seeds", b)?);
        return Ok((a..b).collect());
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse("seeds", s))
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` setting. Keys match the CLI flag names
    /// (dashes or underscores).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        match key.as_str() {
            "problem" => self.problem = value.trim().to_string(),
            "algo" => self.algo = value.trim().parse()?,
            "budget" => self.budget = parse(&key, value)?,
            "batch" => self.batch = parse(&key, value)?,
            "n-beta" => self.n_beta = parse(&key, value)?,
            "delta" => self.delta = parse(&key, value)?,
            "n-s" => self.n_s = parse(&key, value)?,
            "n-e" => self.n_e = parse(&key, value)?,
            "pfe-scale" => self.pfe_scale = parse(&key, value)?,
            "pfe" => self.pfe = parse_bool(&key, value)?,
            "no-pfe" => self.pfe = !parse_bool(&key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "out" | "out-dir" => self.out_dir = PathBuf::from(value.trim()),
            "init" | "init-count" => self.init_count = Some(parse(&key, value)?),
            "timing" => self.timing = parse_bool(&key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every setting of a config text: one `key = value` per line,
    /// `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::by_name(&self.problem)
    }

    pub fn init_count_for(&self, problem: &Problem) -> usize {
        self.init_count.unwrap_or(2 * (problem.dim + 1))
    }

    pub fn validate(&self) -> Result<Problem> {
        let p = self.problem()?;
        if !p.is_supported() {
            return Err(Error::UnsupportedProblem(p.name.to_string()));
        }
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if self.n_beta == 0 {
            return bad("n_beta must be at least 1");
        }
        if self.budget == 0 {
            return bad("budget must be at least 1");
        }
        if self.algo == Algorithm::MoboOsd {
            let init = self.init_count_for(&p);
            if init < p.n_obj + 1 {
                return bad("init must be at least M + 1");
            }
            if self.budget <= init {
                return bad("budget must exceed the initial design size");
            }
            if self.n_s == 0 || self.n_e == 0 {
                return bad("n_s and n_e must be at least 1");
            }
            if !(self.delta > 0.0) || !(self.pfe_scale >= 0.0) {
                return bad("delta must be positive and pfe_scale nonnegative");
            }
        }
        Ok(p)
    }
}
