//! Well-spread weight vectors on the unit simplex by Riesz s-energy
//! minimization.

use crate::sampling::{cube_to_simplex, scrambled_halton};

/// Lower bound applied to every weight after optimization.
pub const EPS_POS: f64 = 1e-6;

/// A set of convex-combination weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub weights: Vec<Vec<f64>>,
}

impl WeightSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec<f64>> {
        self.weights.iter()
    }
}

/// Euclidean projection onto `{w : w ≥ 0, Σw = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Riesz s-energy `Σ_{i<j} ‖w_i − w_j‖^{-s}`.
pub fn riesz_energy(points: &[Vec<f64>], s: f64) -> f64 {
    let mut e = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            e += d2.max(1e-300).powf(-0.5 * s);
        }
    }
    e
}

fn energy_grad(points: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    let m = points[0].len();
    let mut g = vec![vec![0.0; m]; points.len()];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d: Vec<f64> = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a - b)
                .collect();
            let d2: f64 = d.iter().map(|v| v * v).sum::<f64>().max(1e-300);
            let c = -s * d2.powf(-0.5 * s - 1.0);
            for k in 0..m {
                g[i][k] += c * d[k];
                g[j][k] -= c * d[k];
            }
        }
    }
    g
}

/// `n_beta` weight vectors of length `m` with low Riesz energy, `s = m + 1`.
/// Deterministic in `seed`.
pub fn riesz_weights(m: usize, n_beta: usize, seed: u64) -> WeightSet {
    assert!(
        m >= 1 && n_beta >= 1,
        "need at least one objective and one weight"
    );
    if m == 1 {
        return WeightSet {
            weights: vec![vec![1.0]; n_beta],
        };
    }
    let s = (m + 1) as f64;
    let mut pts: Vec<Vec<f64>> = scrambled_halton(n_beta, m - 1, seed)
        .iter()
        .map(|u| cube_to_simplex(u))
        .collect();
    if n_beta >= 2 {
        let mut step = 1e-2;
        let mut energy = riesz_energy(&pts, s).ln();
        for _ in 0..1000 {
            let g = energy_grad(&pts, s);
            let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                break;
            }
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<Vec<f64>> = pts
                    .iter()
                    .zip(&g)
                    .map(|(p, gp)| {
                        let moved: Vec<f64> =
                            p.iter().zip(gp).map(|(a, b)| a - step * b / norm).collect();
                        project_simplex(&moved)
                    })
                    .collect();
                let e = riesz_energy(&trial, s).ln();
                if e < energy {
                    pts = trial;
                    energy = e;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            step = (step * 2.0).min(1e-2);
        }
    }
    let weights = pts
        .into_iter()
        .map(|p| {
            // Shrink toward the barycenter just enough to lift every weight to EPS_POS.
            let scale = 1.0 - m as f64 * EPS_POS;
            p.iter().map(|v| EPS_POS + scale * v).collect()
        })
        .collect();
    WeightSet { weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn min_dist(w: &[Vec<f64>]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..w.len() {
            for j in (i + 1)..w.len() {
                let d: f64 = w[i]
                    .iter()
                    .zip(&w[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
        best
    }

    fn sorted_by_first(mut w: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        w.sort_by(|a, b| b[0].total_cmp(&a[0]));
        w
    }

    // Exhaustive search over a fine grid of the free middle point.
    #[test]
    fn three_weights_on_a_segment_match_grid_oracle() {
        let w = sorted_by_first(riesz_weights(2, 3, 7).weights);
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..1000 {
            let t = k as f64 / 1000.0;
            let pts = vec![vec![1.0, 0.0], vec![t, 1.0 - t], vec![0.0, 1.0]];
            let e = riesz_energy(&pts, 3.0);
            if e < best.0 {
                best = (e, t);
            }
        }
        assert!((best.1 - 0.5).abs() < 1e-3);
        let expect = [[1.0, 0.0], [best.1, 1.0 - best.1], [0.0, 1.0]];
        for (a, b) in w.iter().zip(expect.iter()) {
            for k in 0..2 {
                assert!((a[k] - b[k]).abs() < 0.02, "{w:?}");
            }
        }
    }

    #[test]
    fn two_weights_are_the_endpoints() {
        let w = sorted_by_first(riesz_weights(2, 2, 1).weights);
        assert!(
            (w[0][0] - 1.0).abs() < 0.02 && (w[1][1] - 1.0).abs() < 0.02,
            "{w:?}"
        );
        assert!(w.iter().flatten().all(|&v| v >= EPS_POS * 0.999));
    }

    #[test]
    fn three_weights_in_three_objectives_are_vertices() {
        let w = riesz_weights(3, 3, 5).weights;
        for k in 0..3 {
            assert!(w.iter().any(|p| p[k] > 0.98), "{w:?}");
        }
        // The vertex set beats coarse perturbations of itself.
        let verts = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let e0 = riesz_energy(&verts, 4.0);
        for a in [0.05, 0.1, 0.2] {
            let mut p = verts.clone();
            p[0] = vec![1.0 - a, a, 0.0];
            assert!(riesz_energy(&p, 4.0) > e0);
        }
    }

    #[test]
    fn spacing_is_near_uniform() {
        for n in [5, 10, 20] {
            let w = riesz_weights(2, n, 3).weights;
            let ideal = 2f64.sqrt() / (n - 1) as f64;
            assert!(min_dist(&w) >= 0.6 * ideal, "n={n}");
        }
        // Lattice counts C(p+2, 2) for p = 4, 5.
        for (n, p) in [(15, 4), (21, 5)] {
            let w = riesz_weights(3, n, 11).weights;
            let ideal = 2f64.sqrt() / p as f64;
            assert!(min_dist(&w) >= 0.6 * ideal, "n={n}: {}", min_dist(&w));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(riesz_weights(3, 12, 9), riesz_weights(3, 12, 9));
    }

    #[test]
    fn beats_random_samples_on_most_seeds() {
        use rand::Rng;
        let mut wins = 0;
        for seed in 0..100u64 {
            let w = riesz_weights(3, 10, seed).weights;
            let mut rng = crate::sampling::stream(seed, &[99]);
            let iid: Vec<Vec<f64>> = (0..10)
                .map(|_| cube_to_simplex(&[rng.random::<f64>(), rng.random::<f64>()]))
                .collect();
            if riesz_energy(&w, 4.0) <= riesz_energy(&iid, 4.0) {
                wins += 1;
            }
        }
        assert!(wins >= 99, "{wins}");
    }

    #[test]
    fn energy_is_invariant_under_relabeling() {
        let w = riesz_weights(3, 8, 4).weights;
        let swapped: Vec<Vec<f64>> = w.iter().map(|p| vec![p[2], p[0], p[1]]).collect();
        assert!(
            (riesz_energy(&w, 4.0) - riesz_energy(&swapped, 4.0)).abs()
                < 1e-9 * riesz_energy(&w, 4.0)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn weights_lie_on_the_simplex(m in 2usize..5, n in 1usize..12, seed in 0u64..1000) {
            let w = riesz_weights(m, n, seed);
            prop_assert_eq!(w.len(), n);
            for p in w.iter() {
                prop_assert_eq!(p.len(), m);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(p.iter().all(|&v| v >= EPS_POS * (1.0 - 1e-9)));
            }
        }

        #[test]
        fn projection_lands_on_simplex(v in proptest::collection::vec(-3.0f64..3.0, 2..6)) {
            let p = project_simplex(&v);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}
