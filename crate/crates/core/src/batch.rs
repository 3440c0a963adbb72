//! Greedy hypervolume-improvement batch selection with Kriging-Believer
//! updates and per-origin balancing.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::gp::Surrogate;
use crate::hypervolume::hvi;
use crate::sampling::scrambled_halton;

/// Inputs closer than this (max-norm) are considered the same point.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolItem {
    pub x: Vec<f64>,
    pub beta_index: usize,
}

/// Candidates tagged with the search direction they were expanded from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePool {
    items: Vec<PoolItem>,
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).abs() <= DEDUP_TOL)
}

impl CandidatePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a candidate unless an equal point is already present.
    pub fn insert(&mut self, x: Vec<f64>, beta_index: usize) -> bool {
        if self.items.iter().any(|it| same_point(&it.x, &x)) {
            return false;
        }
        self.items.push(PoolItem { x, beta_index });
        true
    }

    /// Drops candidates that coincide with any of `points`.
    pub fn exclude(&mut self, points: &[Vec<f64>]) {
        self.items
            .retain(|it| !points.iter().any(|p| same_point(&it.x, p)));
    }

    pub fn items(&self) -> &[PoolItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn n_origins(&self) -> usize {
        self.items
            .iter()
            .map(|it| it.beta_index)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// The selected batch and a trace of how it was assembled.
#[derive(Debug, Clone)]
pub struct BatchSelection {
    pub points: Vec<Vec<f64>>,
    pub origins: Vec<usize>,
    pub pool_indices: Vec<usize>,
    /// Improvement of each pick at the time it was chosen.
    pub hvi: Vec<f64>,
    /// Max minus min pick count over the origins that still had candidates
    /// when each pick was made (including the picked origin).
    pub balance_spread: Vec<usize>,
    pub reintroductions: usize,
    /// The models after conditioning on every pick.
    pub conditioned: Surrogate,
    /// The front including the pseudo-observations of every pick.
    pub front: Vec<Vec<f64>>,
}

/// Picks up to `b` candidates. `front` is the current observed
/// non-dominated set and `r` the reference point, in the same space as the
/// model outputs.
pub fn select_batch(
    pool: &CandidatePool,
    models: &Surrogate,
    front: &[Vec<f64>],
    b: usize,
    r: &[f64],
) -> Result<BatchSelection> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let n = pool.len();
    let mut models = models.clone();
    let mut front = front.to_vec();
    let mut available = vec![true; n];
    let mut removed = vec![false; n];
    let mut taken = vec![false; n];
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut sel = BatchSelection {
        points: vec![],
        origins: vec![],
        pool_indices: vec![],
        hvi: vec![],
        balance_spread: vec![],
        reintroductions: 0,
        conditioned: models.clone(),
        front: vec![],
    };
    let mut picked_mu: Vec<Vec<f64>> = Vec::new();

    while sel.points.len() < b {
        if !available.iter().any(|&a| a) {
            if !removed.iter().any(|&r| r) {
                break;
            }
            for i in 0..n {
                if removed[i] {
                    removed[i] = false;
                    available[i] = true;
                }
            }
            sel.reintroductions += 1;
        }
        let live_origins: BTreeSet<usize> = (0..n)
            .filter(|&i| !taken[i])
            .map(|i| pool.items[i].beta_index)
            .collect();

        let scored: Vec<(usize, Vec<f64>, f64)> = (0..n)
            .filter(|&i| available[i])
            .map(|i| {
                let mu = models.mean(&pool.items[i].x);
                let h = hvi(&mu, &front, r);
                (i, mu, h)
            })
            .collect();
        let top = scored.iter().map(|s| s.2).fold(0.0, f64::max);
        let tol = 1e-12 * top;
        let nearest = |mu: &[f64]| -> f64 {
            picked_mu
                .iter()
                .chain(front.iter())
                .map(|p| {
                    p.iter()
                        .zip(mu)
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let mut best = 0;
        let mut best_dist = f64::NAN;
        for k in 0..scored.len() {
            if k == 0 {
                best_dist = nearest(&scored[0].1);
                continue;
            }
            let (a, c) = (scored[k].2, scored[best].2);
            if a > c + tol {
                best = k;
                best_dist = nearest(&scored[k].1);
            } else if (a - c).abs() <= tol {
                let d = nearest(&scored[k].1);
                if d > best_dist {
                    best = k;
                    best_dist = d;
                }
            }
        }
        let (i, mu, h) = scored[best].clone();
        let origin = pool.items[i].beta_index;
        taken[i] = true;
        available[i] = false;
        *counts.entry(origin).or_insert(0) += 1;
        for j in 0..n {
            if available[j] && pool.items[j].beta_index == origin {
                available[j] = false;
                removed[j] = true;
            }
        }
        let psi: Vec<usize> = live_origins
            .iter()
            .map(|o| counts.get(o).copied().unwrap_or(0))
            .collect();
        let spread = psi.iter().max().unwrap() - psi.iter().min().unwrap();

        models = models.condition_on(&pool.items[i].x, &mu)?;
        front.push(mu.clone());
        picked_mu.push(mu);
        sel.points.push(pool.items[i].x.clone());
        sel.origins.push(origin);
        sel.pool_indices.push(i);
        sel.hvi.push(h);
        sel.balance_spread.push(spread);
    }
    sel.conditioned = models;
    sel.front = front;
    Ok(sel)
}

/// Fills `n` extra points by maximizing the summed posterior standard
/// deviation over a scrambled Halton sample, conditioning after each pick.
pub fn fill_by_uncertainty(
    models: &Surrogate,
    n: usize,
    lower: &[f64],
    upper: &[f64],
    exclude: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let dim = lower.len();
    let grid: Vec<Vec<f64>> = scrambled_halton(500, dim, seed)
        .into_iter()
        .map(|u| {
            u.iter()
                .enumerate()
                .map(|(d, v)| lower[d] + v * (upper[d] - lower[d]))
                .collect()
        })
        .filter(|x: &Vec<f64>| !exclude.iter().any(|e| same_point(e, x)))
        .collect();
    let mut models = models.clone();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let best = grid
            .iter()
            .filter(|x| !out.iter().any(|o| same_point(o, x)))
            .map(|x| (x, models.posterior(x).1.iter().sum::<f64>()))
            .fold(None::<(&Vec<f64>, f64)>, |acc, (x, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((x, s)),
            });
        let Some((x, _)) = best else { break };
        let mu = models.mean(x);
        models = models.condition_on(x, &mu)?;
        out.push(x.clone());
    }
    Ok(out)
}
