//! Exact hypervolume for minimization fronts.
//!
//! Two objectives use a sort-and-sweep, three objectives sweep slabs along
//! the last objective, and four or more use WFG-style exclusive volumes over
//! limit sets. Boxes are half-open `[p, r)`: a point equal to the reference
//! in any coordinate contributes nothing.

use crate::types::dominates_unchecked;
use std::cmp::Ordering;

/// Lebesgue measure of the region dominated by `front` and bounded by `r`.
pub fn hypervolume(front: &[Vec<f64>], r: &[f64]) -> f64 {
    let pts: Vec<Vec<f64>> = front
        .iter()
        .filter(|p| p.len() == r.len() && p.iter().zip(r).all(|(a, b)| a < b))
        .cloned()
        .collect();
    hv_nondominated(nondominated(pts), r)
}

/// Hypervolume improvement of adding `mu` to `front`.
pub fn hvi(mu: &[f64], front: &[Vec<f64>], r: &[f64]) -> f64 {
    if mu.len() != r.len() || mu.iter().zip(r).any(|(a, b)| a >= b) {
        return 0.0;
    }
    if front
        .iter()
        .any(|p| p.as_slice() == mu || dominates_unchecked(p, mu))
    {
        return 0.0;
    }
    let limited: Vec<Vec<f64>> = front
        .iter()
        .filter(|p| p.len() == r.len() && p.iter().zip(r).all(|(a, b)| a < b))
        .map(|p| p.iter().zip(mu).map(|(a, b)| a.max(*b)).collect())
        .collect();
    let own = box_volume(mu, r);
    (own - hv_nondominated(nondominated(limited), r)).max(0.0)
}

/// Hypervolume lost when member `index` is removed from `set`.
pub fn hvc(set: &[Vec<f64>], r: &[f64], index: usize) -> f64 {
    let rest: Vec<Vec<f64>> = set
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != index)
        .map(|(_, p)| p.clone())
        .collect();
    hvi(&set[index], &rest, r)
}

fn box_volume(p: &[f64], r: &[f64]) -> f64 {
    p.iter().zip(r).map(|(a, b)| (b - a).max(0.0)).product()
}

fn nondominated(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup();
    if pts.first().is_some_and(|p| p.len() == 2) {
        let mut best = f64::INFINITY;
        pts.retain(|p| {
            let keep = p[1] < best;
            best = best.min(p[1]);
            keep
        });
        return pts;
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    // After a lexicographic sort a point can only be dominated by earlier ones.
    for p in pts {
        if !out.iter().any(|q| dominates_unchecked(q, &p)) {
            out.push(p);
        }
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Expects points that strictly dominate `r` and are mutually non-dominated.
fn hv_nondominated(pts: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    match (pts.len(), r.len()) {
        (0, _) => 0.0,
        (1, _) => box_volume(&pts[0], r),
        (_, 1) => r[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        (_, 2) => hv2(pts, r),
        (_, 3) => hv3(pts, r),
        _ => wfg(pts, r),
    }
}

fn hv2(mut pts: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| lex_cmp(a, b));
    let mut volume = 0.0;
    let mut y_prev = r[1];
    for p in &pts {
        if p[1] < y_prev {
            volume += (r[0] - p[0]) * (y_prev - p[1]);
            y_prev = p[1];
        }
    }
    volume
}

fn hv3(mut pts: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].partial_cmp(&b[2]).unwrap_or(Ordering::Equal));
    let mut volume = 0.0;
    let mut slab: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    let mut i = 0;
    while i < pts.len() {
        let z = pts[i][2];
        while i < pts.len() && pts[i][2] == z {
            slab.push(vec![pts[i][0], pts[i][1]]);
            i += 1;
        }
        let z_next = if i < pts.len() { pts[i][2] } else { r[2] };
        let front2 = nondominated(std::mem::take(&mut slab));
        volume += hv2(front2.clone(), &r[..2]) * (z_next - z);
        slab = front2;
    }
    volume
}

fn wfg(mut pts: Vec<Vec<f64>>, r: &[f64]) -> f64 {
    let last = r.len() - 1;
    // Sorting worst-first in the last objective keeps limit sets small.
    pts.sort_by(|a, b| b[last].partial_cmp(&a[last]).unwrap_or(Ordering::Equal));
    (0..pts.len())
        .map(|i| {
            let p = &pts[i];
            let limited: Vec<Vec<f64>> = pts[i + 1..]
                .iter()
                .map(|q| q.iter().zip(p).map(|(a, b)| a.max(*b)).collect())
                .collect();
            box_volume(p, r) - hv_nondominated(nondominated(limited), r)
        })
        .sum()
}
