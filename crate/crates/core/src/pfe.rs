//! First-order expansion of a (locally) Pareto-optimal design along
//! directions that keep the stationarity conditions satisfied to first order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::gp::Surrogate;
use crate::sampling::stream;

/// Coordinates within this distance of a bound are treated as active.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Multipliers of the stationarity condition `Σαᵢ∇μᵢ + Σβₖ∇gₖ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktMultipliers {
    pub alpha: Vec<f64>,
    pub beta_mult: Vec<f64>,
    /// Norm of the stationarity combination at the returned multipliers.
    pub residual: f64,
}

/// Local exploration space around one subproblem solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSpace {
    pub center: Vec<f64>,
    /// Orthonormal rows of length `D`.
    pub directions: Vec<Vec<f64>>,
    pub beta_index: usize,
}

fn orthonormal_basis(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for _ in 0..2 {
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-10 * scale.max(1e-300) && n > 1e-300 {
            basis.push(v.iter().map(|a| a / n).collect());
        }
    }
    basis
}

fn project_out(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = v.to_vec();
    for b in basis {
        let p: f64 = out.iter().zip(b).map(|(a, c)| a * c).sum();
        for (o, bi) in out.iter_mut().zip(b) {
            *o -= p * bi;
        }
    }
    out
}

/// `min ‖Aα‖²` over the probability simplex by support enumeration. `a` is
/// given by columns.
fn simplex_least_squares(cols: &[Vec<f64>]) -> Vec<f64> {
    let m = cols.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let s = support.len();
        let mut kkt = DMatrix::<f64>::zeros(s + 1, s + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
            }
            kkt[(a, s)] = 1.0;
            kkt[(s, a)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(s + 1);
        rhs[s] = 1.0;
        let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-12) else {
            continue;
        };
        let coef: Vec<f64> = (0..s).map(|a| sol[a]).collect();
        if coef.iter().any(|c| !c.is_finite() || *c < -1e-12) {
            continue;
        }
        let total: f64 = coef.iter().map(|c| c.max(0.0)).sum();
        if !(total > 0.0) {
            continue;
        }
        let mut alpha = vec![0.0; m];
        for (a, &i) in support.iter().enumerate() {
            alpha[i] = coef[a].max(0.0) / total;
        }
        let obj = combination_norm(cols, &alpha);
        if best
            .as_ref()
            .is_none_or(|b| obj < b.0 - 1e-14 * b.0.max(1.0))
        {
            best = Some((obj, alpha));
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| vec![1.0 / m as f64; m])
}

fn combination_norm(cols: &[Vec<f64>], w: &[f64]) -> f64 {
    let d = cols[0].len();
    (0..d)
        .map(|k| {
            cols.iter()
                .zip(w)
                .map(|(c, wi)| c[k] * wi)
                .sum::<f64>()
                .powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Multipliers minimizing the stationarity residual with `α` on the simplex
/// and `β` free. `jac_mu` is `M×D`, `active_jac` is `K×D`.
pub fn kkt_multipliers(jac_mu: &[Vec<f64>], active_jac: &[Vec<f64>]) -> KktMultipliers {
    let m = jac_mu.len();
    if m == 0 {
        return KktMultipliers {
            alpha: vec![],
            beta_mult: vec![0.0; active_jac.len()],
            residual: 0.0,
        };
    }
    let d = jac_mu[0].len();
    let basis = orthonormal_basis(active_jac);
    let projected: Vec<Vec<f64>> = jac_mu.iter().map(|g| project_out(g, &basis)).collect();
    let alpha = simplex_least_squares(&projected);
    let combo: Vec<f64> = (0..d)
        .map(|k| jac_mu.iter().zip(&alpha).map(|(g, a)| g[k] * a).sum())
        .collect();

    let beta_mult = if active_jac.is_empty() {
        vec![]
    } else {
        let gt = DMatrix::from_fn(d, active_jac.len(), |r, c| active_jac[c][r]);
        let rhs = DVector::from_iterator(d, combo.iter().map(|v| -v));
        gt.svd(true, true)
            .solve(&rhs, 1e-12)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_else(|_| vec![0.0; active_jac.len()])
    };
    let mut full = combo.clone();
    for (row, b) in active_jac.iter().zip(&beta_mult) {
        for k in 0..d {
            full[k] += b * row[k];
        }
    }
    let residual = full.iter().map(|v| v * v).sum::<f64>().sqrt();
    KktMultipliers {
        alpha,
        beta_mult,
        residual,
    }
}

/// Indices of coordinates sitting on a bound.
pub fn active_coordinates(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<usize> {
    (0..x.len())
        .filter(|&d| x[d] - lower[d] <= ACTIVE_TOL || upper[d] - x[d] <= ACTIVE_TOL)
        .collect()
}

/// Directions `v` (zero on active coordinates) for which `H v` stays in the
/// span of the free objective gradients, with `H = Σ αᵢ ∇²μᵢ`. Combination
/// weights are restricted to sum to zero so that the multipliers stay on the
/// simplex to first order. At most `min(M−1, |free|)` directions.
pub fn exploration_directions_from(
    x: &[f64],
    jac_mu: &[Vec<f64>],
    hess_mu: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
) -> Vec<Vec<f64>> {
    let dim = x.len();
    let m = jac_mu.len();
    let active = active_coordinates(x, lower, upper);
    let free: Vec<usize> = (0..dim).filter(|d| !active.contains(d)).collect();
    let nf = free.len();
    let k_max = m.saturating_sub(1).min(nf);
    if k_max == 0 {
        return vec![];
    }
    let active_rows: Vec<Vec<f64>> = active
        .iter()
        .map(|&d| {
            let mut e = vec![0.0; dim];
            e[d] = 1.0;
            e
        })
        .collect();
    let alpha = kkt_multipliers(jac_mu, &active_rows).alpha;
    let h = |i: usize, j: usize| -> f64 {
        (0..m)
            .map(|k| alpha[k] * hess_mu[k][free[i] * dim + free[j]])
            .sum()
    };

    // Unknowns (v_F, c); equations H_FF v − J_Fᵀ c = 0 and 1ᵀc = 0.
    let mut a = DMatrix::<f64>::zeros(nf + 1, nf + m);
    for i in 0..nf {
        for j in 0..nf {
            a[(i, j)] = h(i, j);
        }
        for k in 0..m {
            a[(i, nf + k)] = -jac_mu[k][free[i]];
        }
    }
    for k in 0..m {
        a[(nf, nf + k)] = 1.0;
    }
    let scale = a.amax().max(1e-300);
    let a = a / scale;
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let top = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(1e-300);
    let n_null = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] <= 1e-12 * top)
        .count()
        .max(m - 1);
    let raw: Vec<Vec<f64>> = order[..n_null.min(order.len())]
        .iter()
        .map(|&i| (0..nf).map(|r| eig.eigenvectors[(r, i)]).collect())
        .collect();
    let basis = orthonormal_basis(&raw);
    basis
        .into_iter()
        .take(k_max)
        .map(|v| {
            let mut full = vec![0.0; dim];
            for (r, &d) in free.iter().enumerate() {
                full[d] = v[r];
            }
            full
        })
        .collect()
}

/// Exploration space of the surrogate around `x`.
pub fn exploration_directions(
    models: &Surrogate,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    beta_index: usize,
) -> ExplorationSpace {
    let pe = models.posterior_derivs(x, 2);
    let hess = pe.hess_mu.expect("second order requested");
    ExplorationSpace {
        center: x.to_vec(),
        directions: exploration_directions_from(x, &pe.jac_mu, &hess, lower, upper),
        beta_index,
    }
}

/// `n_e` points: the center, then `center + Vᵀu` with `u` uniform in
/// `[−scale, scale]^k`, clipped to the box. An empty space yields only the
/// center.
pub fn sample_pfe(
    space: &ExplorationSpace,
    n_e: usize,
    scale: f64,
    lower: &[f64],
    upper: &[f64],
    seed: u64,
) -> Vec<Vec<f64>> {
    if space.directions.is_empty() {
        return vec![space.center.clone()];
    }
    let mut rng = stream(seed, &[0x9fe, space.beta_index as u64]);
    let mut out = Vec::with_capacity(n_e.max(1));
    out.push(space.center.clone());
    while out.len() < n_e {
        let mut x = space.center.clone();
        for v in &space.directions {
            let u = if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            };
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += u * vi;
            }
        }
        for (d, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(lower[d], upper[d]);
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{FitOptions, GpModel};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn opposing_gradients_balance() {
        let k = kkt_multipliers(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[]);
        assert!((k.alpha[0] - 0.5).abs() < 1e-12 && (k.alpha[1] - 0.5).abs() < 1e-12);
        assert!(k.residual < 1e-12);
    }

    #[test]
    fn parallel_gradients_leave_a_residual() {
        let k = kkt_multipliers(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[]);
        assert!((k.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(k.alpha.iter().all(|a| *a >= 0.0));
        assert!((k.residual - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_stationary_objective() {
        let k = kkt_multipliers(&[vec![0.0, 0.0]], &[]);
        assert_eq!(k.alpha, vec![1.0]);
        assert_eq!(k.residual, 0.0);
    }

    #[test]
    fn active_bounds_absorb_normal_components() {
        let k = kkt_multipliers(&[vec![1.0, 3.0], vec![-1.0, 2.0]], &[vec![0.0, 1.0]]);
        assert!(k.residual < 1e-12);
        assert!((k.beta_mult[0] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn interior_bi_objective_point_has_one_direction() {
        let jac = vec![vec![1.0, 0.5], vec![-1.0, -0.4]];
        let hess = vec![vec![2.0, 0.1, 0.1, 1.0], vec![1.0, 0.0, 0.0, 3.0]];
        let v = exploration_directions_from(&[0.5, 0.5], &jac, &hess, &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(v.len(), 1);
        assert!((v[0].iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bound_coordinate_is_frozen() {
        let jac = vec![vec![1.0, 0.5], vec![-1.0, -0.4]];
        let hess = vec![vec![2.0, 0.1, 0.1, 1.0], vec![1.0, 0.0, 0.0, 3.0]];
        let v = exploration_directions_from(&[0.0, 0.5], &jac, &hess, &[0.0, 0.0], &[1.0, 1.0]);
        assert!(v.len() <= 1);
        for d in &v {
            assert!(d[0].abs() < 1e-12);
        }
        let none = exploration_directions_from(&[0.0, 1.0], &jac, &hess, &[0.0, 0.0], &[1.0, 1.0]);
        assert!(none.is_empty());
    }

    fn quadratic_surrogate() -> Surrogate {
        let mut xs = Vec::new();
        for i in 0..9 {
            for j in 0..9 {
                xs.push(vec![-0.5 + 2.0 * i as f64 / 8.0, -0.5 + j as f64 / 8.0]);
            }
        }
        let f1: Vec<f64> = xs.iter().map(|x| x[0] * x[0] + x[1] * x[1]).collect();
        let f2: Vec<f64> = xs
            .iter()
            .map(|x| (x[0] - 1.0).powi(2) + x[1] * x[1])
            .collect();
        Surrogate::new(vec![
            GpModel::fit(&xs, &f1, &FitOptions::with_seed(1)).unwrap(),
            GpModel::fit(&xs, &f2, &FitOptions::with_seed(2)).unwrap(),
        ])
    }

    #[test]
    fn direction_follows_the_pareto_segment() {
        let s = quadratic_surrogate();
        for t in [0.3, 0.5, 0.7] {
            let sp = exploration_directions(&s, &[t, 0.0], &[-0.5, -0.5], &[1.5, 0.5], 0);
            assert_eq!(sp.directions.len(), 1);
            let cos = sp.directions[0][0].abs();
            assert!(
                cos >= 5f64.to_radians().cos(),
                "t={t}: {:?}",
                sp.directions[0]
            );
        }
    }

    #[test]
    fn directions_satisfy_the_span_condition() {
        let s = quadratic_surrogate();
        let x = [0.4, 0.1];
        let pe = s.posterior_derivs(&x, 2);
        let hess = pe.hess_mu.unwrap();
        let v = exploration_directions_from(&x, &pe.jac_mu, &hess, &[-0.5, -0.5], &[1.5, 0.5]);
        let alpha = kkt_multipliers(&pe.jac_mu, &[]).alpha;
        for d in &v {
            let hv: Vec<f64> = (0..2)
                .map(|i| {
                    (0..2)
                        .map(|j| (0..2).map(|k| alpha[k] * hess[k][i * 2 + j]).sum::<f64>() * d[j])
                        .sum()
                })
                .collect();
            let basis = orthonormal_basis(&pe.jac_mu);
            let perp = project_out(&hv, &basis);
            let n_hv = hv.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(perp.iter().map(|a| a * a).sum::<f64>().sqrt() <= 1e-6 * n_hv + 1e-10);
        }
    }

    // Analytic quadratics with different curvature: the Pareto set is a curve,
    // so the stationarity residual along a tangent step grows like t².
    #[test]
    fn first_order_drift_is_quadratic() {
        let a = [1.0, 4.0];
        let b = [4.0, 1.0];
        let jac = |x: &[f64]| {
            vec![
                vec![2.0 * a[0] * x[0], 2.0 * a[1] * x[1]],
                vec![2.0 * b[0] * (x[0] - 1.0), 2.0 * b[1] * (x[1] - 1.0)],
            ]
        };
        let hess = vec![
            vec![2.0 * a[0], 0.0, 0.0, 2.0 * a[1]],
            vec![2.0 * b[0], 0.0, 0.0, 2.0 * b[1]],
        ];
        let center = [0.8, 0.2];
        assert!(kkt_multipliers(&jac(&center), &[]).residual < 1e-12);
        let v =
            exploration_directions_from(&center, &jac(&center), &hess, &[-5.0, -5.0], &[5.0, 5.0]);
        assert_eq!(v.len(), 1);
        let ts = [1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2];
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let x = [center[0] + t * v[0][0], center[1] + t * v[0][1]];
                (t.ln(), kkt_multipliers(&jac(&x), &[]).residual.ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 2.0).abs() <= 0.5, "slope {slope}");
    }

    #[test]
    fn sampling_examples() {
        let sp = ExplorationSpace {
            center: vec![0.5, 0.5],
            directions: vec![vec![0.6, 0.8]],
            beta_index: 3,
        };
        let zero = sample_pfe(&sp, 4, 0.0, &[0.0; 2], &[1.0; 2], 1);
        assert!(zero.iter().all(|p| p == &sp.center));
        let pts = sample_pfe(&sp, 3, 0.1, &[0.0; 2], &[1.0; 2], 1);
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0], sp.center);
        for p in &pts {
            let t = (p[0] - 0.5) / 0.6;
            assert!(t.abs() <= 0.1 + 1e-12 && (p[1] - 0.5 - 0.8 * t).abs() < 1e-12);
        }
        let edge = ExplorationSpace {
            center: vec![1.0, 0.5],
            directions: vec![vec![1.0, 0.0]],
            beta_index: 0,
        };
        assert!(sample_pfe(&edge, 10, 0.3, &[0.0; 2], &[1.0; 2], 2)
            .iter()
            .all(|p| p[0] <= 1.0));
        let empty = ExplorationSpace {
            center: vec![0.2, 0.2],
            directions: vec![],
            beta_index: 0,
        };
        assert_eq!(
            sample_pfe(&empty, 10, 0.1, &[0.0; 2], &[1.0; 2], 2),
            vec![vec![0.2, 0.2]]
        );
        assert_eq!(
            sample_pfe(&sp, 5, 0.1, &[0.0; 2], &[1.0; 2], 9),
            sample_pfe(&sp, 5, 0.1, &[0.0; 2], &[1.0; 2], 9)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn directions_are_orthonormal_and_bounded(
            m in 2usize..5,
            dim in 1usize..5,
            seed in 0u64..10_000,
            pin in proptest::option::of(0usize..5),
        ) {
            let mut rng = stream(seed, &[]);
            let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..0.9)).collect();
            if let Some(p) = pin {
                if p < dim { x[p] = 0.0; }
            }
            let jac: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let hess: Vec<Vec<f64>> = (0..m).map(|_| {
                let r: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                (0..dim * dim).map(|ij| { let (i, j) = (ij / dim, ij % dim); r[i * dim + j] + r[j * dim + i] + if i == j { 4.0 } else { 0.0 } }).collect()
            }).collect();
            let lo = vec![0.0; dim];
            let hi = vec![1.0; dim];
            let v = exploration_directions_from(&x, &jac, &hess, &lo, &hi);
            prop_assert!(v.len() <= (m - 1).min(dim));
            let active = active_coordinates(&x, &lo, &hi);
            for (i, a) in v.iter().enumerate() {
                for (j, b) in v.iter().enumerate() {
                    let d: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - expect).abs() < 1e-8);
                }
                for &k in &active {
                    prop_assert!(a[k].abs() < 1e-8);
                }
            }
            let sp = ExplorationSpace { center: x.clone(), directions: v, beta_index: 0 };
            for p in sample_pfe(&sp, 10, 0.5, &lo, &hi, seed) {
                prop_assert!(p.iter().all(|c| (0.0..=1.0).contains(c)));
            }
        }

        #[test]
        fn multipliers_stay_on_the_simplex(m in 1usize..5, dim in 1usize..5, seed in 0u64..10_000) {
            let mut rng = stream(seed, &[1]);
            let jac: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let k = kkt_multipliers(&jac, &[]);
            prop_assert!((k.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(k.alpha.iter().all(|a| *a >= 0.0));
            // No vertex does better than the returned combination.
            for i in 0..m {
                let n = jac[i].iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(k.residual <= n + 1e-9);
            }
        }
    }
}
