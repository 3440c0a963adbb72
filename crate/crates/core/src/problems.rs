//! Benchmark problems with known Pareto fronts.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::hypervolume::hypervolume;
use crate::sampling::scrambled_halton;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Dtlz2,
    Zdt1,
    Vlmop2,
    /// Reference point recorded, objective functions not provided.
    Reserved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: &'static str,
    pub dim: usize,
    pub n_obj: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub ref_point: Vec<f64>,
    pub kind: ProblemKind,
}

/// Every registered problem name.
pub const PROBLEM_NAMES: [&str; 9] = [
    "dtlz2-m2",
    "dtlz2-m3",
    "dtlz2-m4",
    "zdt1",
    "vlmop2",
    "speed-reducer",
    "car-side",
    "marine",
    "water-planning",
];

impl Problem {
    /// Looks up a problem by (case-insensitive) name.
    pub fn by_name(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace('_', "-");
        let p = |name, dim, n_obj, lo: f64, hi: f64, r: Vec<f64>, kind| Problem {
            name,
            dim,
            n_obj,
            lower: vec![lo; dim],
            upper: vec![hi; dim],
            ref_point: r,
            kind,
        };
        Ok(match key.as_str() {
            "dtlz2-m2" => p("dtlz2-m2", 5, 2, 0.0, 1.0, vec![1.1; 2], ProblemKind::Dtlz2),
            "dtlz2-m3" => p("dtlz2-m3", 5, 3, 0.0, 1.0, vec![1.1; 3], ProblemKind::Dtlz2),
            "dtlz2-m4" => p("dtlz2-m4", 5, 4, 0.0, 1.0, vec![1.1; 4], ProblemKind::Dtlz2),
            "zdt1" => p("zdt1", 5, 2, 0.0, 1.0, vec![11.0; 2], ProblemKind::Zdt1),
            "vlmop2" => p("vlmop2", 5, 2, -2.0, 2.0, vec![1.0; 2], ProblemKind::Vlmop2),
            "speed-reducer" => p(
                "speed-reducer",
                7,
                3,
                0.0,
                1.0,
                vec![6735.9, 1761.17, 402.34],
                ProblemKind::Reserved,
            ),
            "car-side" => p(
                "car-side",
                7,
                4,
                0.0,
                1.0,
                vec![38.89, 4.44, 12.94, 8.87],
                ProblemKind::Reserved,
            ),
            "marine" => p(
                "marine",
                6,
                4,
                0.0,
                1.0,
                vec![-210.44, 18970.82, 24111.07, 11.36],
                ProblemKind::Reserved,
            ),
            "water-planning" => p(
                "water-planning",
                3,
                6,
                0.0,
                1.0,
                vec![84349.0, 1461.0, 3101484.0, 12442800.0, 67030.0, 1.59],
                ProblemKind::Reserved,
            ),
            _ => return Err(Error::UnknownProblem(name.to_string())),
        })
    }

    pub fn is_supported(&self) -> bool {
        self.kind != ProblemKind::Reserved
    }

    /// Objective values at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        for (d, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite("design point".into()));
            }
            if v < self.lower[d] || v > self.upper[d] {
                return Err(Error::OutOfBounds { index: d, value: v });
            }
        }
        Ok(match self.kind {
            ProblemKind::Dtlz2 => dtlz2(x, self.n_obj),
            ProblemKind::Zdt1 => zdt1(x),
            ProblemKind::Vlmop2 => vlmop2(x),
            ProblemKind::Reserved => return Err(Error::UnsupportedProblem(self.name.to_string())),
        })
    }

    /// Maps a unit-cube point into the problem box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(d, v)| {
                (self.lower[d] + v * (self.upper[d] - self.lower[d]))
                    .clamp(self.lower[d], self.upper[d])
            })
            .collect()
    }

    /// Maps a box point into the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(d, v)| (v - self.lower[d]) / (self.upper[d] - self.lower[d]))
            .collect()
    }

    /// `n` Pareto-optimal objective vectors spread along the front's
    /// parameterization (a uniform grid for two objectives, a scrambled
    /// Halton design otherwise).
    pub fn true_front_samples(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        let grid = |i: usize| {
            if n <= 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            }
        };
        Ok(match self.kind {
            ProblemKind::Dtlz2 if self.n_obj == 2 => (0..n)
                .map(|i| {
                    let t = grid(i) * FRAC_PI_2;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            ProblemKind::Dtlz2 => scrambled_halton(n, self.n_obj - 1, 0x0f0f)
                .into_iter()
                .map(|u| {
                    let mut x = vec![0.5; self.dim];
                    x[..self.n_obj - 1].copy_from_slice(&u);
                    dtlz2(&x, self.n_obj)
                })
                .collect(),
            ProblemKind::Zdt1 => (0..n)
                .map(|i| {
                    let f1 = grid(i);
                    vec![f1, 1.0 - f1.sqrt()]
                })
                .collect(),
            ProblemKind::Vlmop2 => (0..n)
                .map(|i| {
                    let t = -1.0 + 2.0 * grid(i);
                    let c = t / (self.dim as f64).sqrt();
                    vlmop2(&vec![c; self.dim])
                })
                .collect(),
            ProblemKind::Reserved => return Err(Error::UnsupportedProblem(self.name.to_string())),
        })
    }

    /// Maximum attainable hypervolume with respect to `ref_point`.
    pub fn hv_max(&self) -> Option<f64> {
        match (self.kind, self.n_obj) {
            (ProblemKind::Dtlz2, 2) => Some(1.1f64.powi(2) - PI / 4.0),
            (ProblemKind::Dtlz2, 3) => Some(1.1f64.powi(3) - PI / 6.0),
            (ProblemKind::Dtlz2, 4) => Some(1.1f64.powi(4) - PI * PI / 32.0),
            (ProblemKind::Zdt1, _) => Some(120.0 + 2.0 / 3.0),
            (ProblemKind::Vlmop2, _) => {
                static CACHE: OnceLock<f64> = OnceLock::new();
                Some(*CACHE.get_or_init(|| {
                    let front = self.true_front_samples(1_000_000).expect("analytic front");
                    hypervolume(&front, &self.ref_point)
                }))
            }
            _ => None,
        }
    }
}

fn dtlz2(x: &[f64], m: usize) -> Vec<f64> {
    let g: f64 = x[m - 1..].iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
    (0..m)
        .map(|k| {
            let mut f = 1.0 + g;
            for xi in &x[..m - 1 - k] {
                f *= (xi * FRAC_PI_2).cos();
            }
            if k > 0 {
                f *= (x[m - 1 - k] * FRAC_PI_2).sin();
            }
            f
        })
        .collect()
}

fn zdt1(x: &[f64]) -> Vec<f64> {
    let f1 = x[0];
    let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
    vec![f1, g * (1.0 - (f1 / g).sqrt())]
}

fn vlmop2(x: &[f64]) -> Vec<f64> {
    let c = 1.0 / (x.len() as f64).sqrt();
    let a: f64 = x.iter().map(|v| (v - c) * (v - c)).sum();
    let b: f64 = x.iter().map(|v| (v + c) * (v + c)).sum();
    vec![1.0 - (-a).exp(), 1.0 - (-b).exp()]
}
