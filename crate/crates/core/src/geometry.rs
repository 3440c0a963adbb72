//! Approximated convex hull of individual minima and the orthogonal search
//! directions through it.

use crate::error::{Error, Result};

/// Boundary points and quasi-normal built from an ideal/nadir pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChimFrame {
    /// Column `m` is the boundary point `p_m`; stored column-major as
    /// `p[m][k]` = coordinate `k` of `p_m`.
    pub p: Vec<Vec<f64>>,
    pub normal: Vec<f64>,
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
}

/// A search line through `u_point` along the frame normal.
#[derive(Debug, Clone, PartialEq)]
pub struct OsdLine {
    pub beta: Vec<f64>,
    pub u_point: Vec<f64>,
    pub normal: Vec<f64>,
}

/// Signed position along a line, the projected point and the distance to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub lambda: f64,
    pub gamma: Vec<f64>,
    pub dist: f64,
}

/// Builds the frame. A single flat objective is widened slightly; a frame
/// that is flat in every objective is rejected.
pub fn build_frame(ideal: &[f64], nadir: &[f64]) -> Result<ChimFrame> {
    let m = ideal.len();
    if nadir.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: nadir.len(),
        });
    }
    if ideal.iter().chain(nadir).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ideal/nadir".into()));
    }
    if ideal.iter().zip(nadir).all(|(a, b)| a == b) {
        return Err(Error::DegenerateFrame);
    }
    let nadir: Vec<f64> = ideal
        .iter()
        .zip(nadir)
        .map(|(&a, &b)| {
            if b <= a {
                a + 1e-6 * a.abs().max(1.0)
            } else {
                b
            }
        })
        .collect();
    let p: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut col = ideal.to_vec();
            col[j] = nadir[j];
            col
        })
        .collect();
    let sum: Vec<f64> = (0..m).map(|k| p.iter().map(|col| col[k]).sum()).collect();
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateFrame);
    }
    let normal = sum.iter().map(|v| -v / norm).collect();
    Ok(ChimFrame {
        p,
        normal,
        ideal: ideal.to_vec(),
        nadir,
    })
}

impl ChimFrame {
    pub fn n_objectives(&self) -> usize {
        self.ideal.len()
    }

    /// `P·β`.
    pub fn chim_point(&self, beta: &[f64]) -> Vec<f64> {
        let m = self.n_objectives();
        (0..m)
            .map(|k| self.p.iter().zip(beta).map(|(col, b)| col[k] * b).sum())
            .collect()
    }

    pub fn line(&self, beta: &[f64]) -> OsdLine {
        OsdLine {
            beta: beta.to_vec(),
            u_point: self.chim_point(beta),
            normal: self.normal.clone(),
        }
    }
}

/// Projects `mu` onto the line: `λ = (μ − U)·n`, `γ = U + λn`, `l = ‖μ − γ‖`.
pub fn lambda_gamma(mu: &[f64], line: &OsdLine) -> Projection {
    let lambda: f64 = mu
        .iter()
        .zip(&line.u_point)
        .zip(&line.normal)
        .map(|((a, u), n)| (a - u) * n)
        .sum();
    let gamma: Vec<f64> = line
        .u_point
        .iter()
        .zip(&line.normal)
        .map(|(u, n)| u + lambda * n)
        .collect();
    let dist = mu
        .iter()
        .zip(&gamma)
        .map(|(a, g)| (a - g) * (a - g))
        .sum::<f64>()
        .sqrt();
    Projection {
        lambda,
        gamma,
        dist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_for_rectangular_bounds() {
        let f = build_frame(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(f.p, vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
        let s5 = 5f64.sqrt();
        assert!((f.normal[0] + 1.0 / s5).abs() < 1e-15 && (f.normal[1] + 2.0 / s5).abs() < 1e-15);
    }

    #[test]
    fn frame_for_unit_cube() {
        let f = build_frame(&[0.0; 3], &[1.0; 3]).unwrap();
        for m in 0..3 {
            for k in 0..3 {
                assert_eq!(f.p[m][k], if m == k { 1.0 } else { 0.0 });
            }
            assert!((f.normal[m] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn coincident_ideal_and_nadir_is_degenerate() {
        assert_eq!(
            build_frame(&[2.0, 2.0], &[2.0, 2.0]),
            Err(Error::DegenerateFrame)
        );
    }

    #[test]
    fn single_flat_objective_is_widened() {
        let f = build_frame(&[0.0, 3.0], &[1.0, 3.0]).unwrap();
        assert!(f.nadir[1] > 3.0 && f.nadir[1] - 3.0 < 1e-5);
        assert!((f.normal.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chim_points_by_hand() {
        let f = build_frame(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(f.chim_point(&[0.5, 0.5]), vec![0.5, 1.0]);
        assert_eq!(f.chim_point(&[1.0, 0.0]), f.p[0]);
        assert_eq!(f.chim_point(&[0.0, 1.0]), f.p[1]);
    }

    #[test]
    fn projections_by_hand() {
        let f = build_frame(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let line = f.line(&[0.5, 0.5]);
        let pr = lambda_gamma(&[0.0, 0.0], &line);
        assert!((pr.lambda - 2.5 / 5f64.sqrt()).abs() < 1e-12);
        assert!(pr.gamma.iter().all(|v| v.abs() < 1e-12) && pr.dist < 1e-12);

        let pr = lambda_gamma(&line.u_point, &line);
        assert_eq!(pr.lambda, 0.0);
        assert_eq!(pr.dist, 0.0);

        let shifted: Vec<f64> = line
            .u_point
            .iter()
            .zip(&line.normal)
            .map(|(u, n)| u + n)
            .collect();
        let pr = lambda_gamma(&shifted, &line);
        assert!((pr.lambda - 1.0).abs() < 1e-12 && pr.dist < 1e-12);
    }

    fn frame_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..5).prop_flat_map(|m| {
            (
                proptest::collection::vec(-2.0f64..2.0, m),
                proptest::collection::vec(0.01f64..3.0, m),
                proptest::collection::vec(-3.0f64..3.0, m),
                proptest::collection::vec(0.0f64..1.0, m),
            )
        })
    }

    proptest! {
        #[test]
        fn projection_invariants((ideal, width, mu, raw_beta) in frame_strategy()) {
            let nadir: Vec<f64> = ideal.iter().zip(&width).map(|(a, w)| a + w).collect();
            let f = build_frame(&ideal, &nadir).unwrap();
            prop_assert!((f.normal.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            let total: f64 = raw_beta.iter().sum::<f64>() + 1e-9;
            let beta: Vec<f64> = raw_beta.iter().map(|b| (b + 1e-9 / raw_beta.len() as f64) / total).collect();
            let line = f.line(&beta);
            let pr = lambda_gamma(&mu, &line);
            let ortho: f64 = mu.iter().zip(&pr.gamma).zip(&line.normal).map(|((a, g), n)| (a - g) * n).sum();
            prop_assert!(ortho.abs() < 1e-10);
            let d2: f64 = mu.iter().zip(&line.u_point).map(|(a, u)| (a - u) * (a - u)).sum();
            prop_assert!((pr.dist * pr.dist + pr.lambda * pr.lambda - d2).abs() <= 1e-9 * d2.max(1e-12));

            // Translating mu and U together leaves lambda unchanged.
            let shift = 0.7;
            let moved_line = OsdLine {
                beta: line.beta.clone(),
                u_point: line.u_point.iter().map(|u| u + shift).collect(),
                normal: line.normal.clone(),
            };
            let moved_mu: Vec<f64> = mu.iter().map(|v| v + shift).collect();
            prop_assert!((lambda_gamma(&moved_mu, &moved_line).lambda - pr.lambda).abs() < 1e-10);

            // CHIM points stay inside the bounding box of the boundary points.
            for (k, u) in line.u_point.iter().enumerate() {
                prop_assert!(*u >= ideal[k] - 1e-12 && *u <= nadir[k] + 1e-12);
            }
        }

        #[test]
        fn boundary_points_cover_observations(points in proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, 3), 2..20)) {
            let ideal: Vec<f64> = (0..3).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
            let nadir: Vec<f64> = (0..3).map(|k| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
            if let Ok(f) = build_frame(&ideal, &nadir) {
                for m in 0..3 {
                    prop_assert_eq!(f.p[m][m], f.nadir[m]);
                    for p in &points {
                        prop_assert!(f.p[m][m] >= p[m]);
                    }
                }
            }
        }
    }
}
