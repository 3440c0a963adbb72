//! Front-quality indicators.

use crate::error::{Error, Result};
use crate::hypervolume::hypervolume;

/// Floor applied before taking the logarithm of the hypervolume gap.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub log_hv_diff: f64,
    pub hv: f64,
    pub igd: Option<f64>,
    pub igd_plus: Option<f64>,
    pub eps: Option<f64>,
    pub eval_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgdVariant {
    Igd,
    IgdPlus,
}

/// `log10(max(hv_max − HV(front, r), 1e−12))`.
pub fn log_hv_diff(front: &[Vec<f64>], r: &[f64], hv_max: f64) -> f64 {
    log_gap(hypervolume(front, r), hv_max)
}

/// Same as [`log_hv_diff`] for an already computed hypervolume.
pub fn log_gap(hv: f64, hv_max: f64) -> f64 {
    (hv_max - hv).max(LOG_FLOOR).log10()
}

fn check_sets(front: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<()> {
    if front.is_empty() || reference.is_empty() {
        return Err(Error::InsufficientData(
            "indicator needs two nonempty sets".into(),
        ));
    }
    Ok(())
}

/// Mean over reference points of the distance to the closest front point.
/// IGD uses the Euclidean distance, IGD+ only counts the amount by which a
/// front point is worse than the reference point.
pub fn igd_family(front: &[Vec<f64>], reference: &[Vec<f64>], variant: IgdVariant) -> Result<f64> {
    check_sets(front, reference)?;
    let total: f64 = reference
        .iter()
        .map(|z| {
            front
                .iter()
                .map(|a| {
                    a.iter()
                        .zip(z)
                        .map(|(ai, zi)| match variant {
                            IgdVariant::Igd => (ai - zi).powi(2),
                            IgdVariant::IgdPlus => (ai - zi).max(0.0).powi(2),
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / reference.len() as f64)
}

pub fn igd(front: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    igd_family(front, reference, IgdVariant::Igd)
}

pub fn igd_plus(front: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    igd_family(front, reference, IgdVariant::IgdPlus)
}

/// Additive ε-indicator: `max_z min_a max_m (a_m − z_m)`.
pub fn eps_indicator(front: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    check_sets(front, reference)?;
    Ok(reference
        .iter()
        .map(|z| {
            front
                .iter()
                .map(|a| {
                    a.iter()
                        .zip(z)
                        .map(|(ai, zi)| ai - zi)
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

type FrontMetric = fn(&[Vec<f64>], &[Vec<f64>]) -> Result<f64>;

/// All indicators of `front` at once; distance-based ones are skipped when
/// no reference set is given.
pub fn report(
    front: &[Vec<f64>],
    r: &[f64],
    hv_max: f64,
    reference: Option<&[Vec<f64>]>,
    eval_count: usize,
) -> MetricReport {
    let hv = hypervolume(front, r);
    let distance = |f: FrontMetric| reference.and_then(|z| f(front, z).ok());
    MetricReport {
        log_hv_diff: log_gap(hv, hv_max),
        hv,
        igd: distance(igd),
        igd_plus: distance(igd_plus),
        eps: distance(eps_indicator),
        eval_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_gap_examples() {
        assert_eq!(log_gap(0.5, 0.5), -12.0);
        assert_eq!(log_hv_diff(&[], &[1.0, 1.0], 0.25), 0.25f64.log10());
        let max = 1.21 - std::f64::consts::PI / 4.0;
        // −2.5373 exactly; −2.536 when the maximum is rounded to 0.42461.
        assert!((log_gap(0.4217, max) - (-2.5373)).abs() < 1e-4);
        assert!((log_gap(0.4217, 0.42461) - (-2.536)).abs() < 1e-3);
    }

    #[test]
    fn distance_examples() {
        let z = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(igd(&z, &z).unwrap(), 0.0);
        assert_eq!(igd_plus(&z, &z).unwrap(), 0.0);
        assert_eq!(eps_indicator(&z, &z).unwrap(), 0.0);
        assert!((igd(&[vec![0.0, 0.0]], &[vec![1.0, 1.0]]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(igd_plus(&[vec![0.0, 0.0]], &[vec![1.0, 1.0]]).unwrap(), 0.0);
        assert!(
            (igd_plus(&[vec![2.0, 2.0]], &[vec![1.0, 1.0]]).unwrap() - 2f64.sqrt()).abs() < 1e-15
        );
        assert_eq!(
            eps_indicator(&[vec![1.0, 1.0]], &[vec![0.0, 0.0]]).unwrap(),
            1.0
        );
        assert_eq!(
            eps_indicator(&[vec![0.0, 2.0], vec![2.0, 0.0]], &[vec![0.0, 0.0]]).unwrap(),
            2.0
        );
        assert!(igd(&[], &z).is_err());
        assert!(eps_indicator(&z, &[]).is_err());
    }

    #[test]
    fn report_collects_everything() {
        let z = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let rep = report(&z, &[2.0, 2.0], 3.0, Some(&z), 7);
        assert_eq!(rep.hv, 3.0);
        assert_eq!(rep.log_hv_diff, -12.0);
        assert_eq!(rep.igd, Some(0.0));
        assert_eq!(rep.eval_count, 7);
        assert_eq!(report(&z, &[2.0, 2.0], 3.0, None, 7).igd, None);
    }

    fn set() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, 3), 1..12)
    }

    proptest! {
        #[test]
        fn indicator_invariants(a in set(), z in set()) {
            let i = igd(&a, &z).unwrap();
            let ip = igd_plus(&a, &z).unwrap();
            prop_assert!(i >= 0.0 && ip >= 0.0);
            prop_assert!(ip <= i + 1e-12);
            prop_assert_eq!(igd(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(igd_plus(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(eps_indicator(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn log_gap_shrinks_as_the_front_grows(a in set(), extra in set()) {
            let r = [2.5; 3];
            let max = 2.5f64.powi(3);
            let mut grown = a.clone();
            grown.extend(extra);
            prop_assert!(log_hv_diff(&grown, &r, max) <= log_hv_diff(&a, &r, max));
        }
    }
}
