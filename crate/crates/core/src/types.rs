//! Objective vectors, Pareto dominance and the observation dataset.

use crate::error::{Error, Result};

/// A point in the design space.
pub type DesignPoint = Vec<f64>;

/// A vector of objective values, all minimized.
pub type ObjectiveVector = Vec<f64>;

/// Returns true iff `a` Pareto-dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices of the non-dominated members of `points`, in order of first
/// occurrence. Exact duplicates keep only their first occurrence.
pub fn pareto_filter(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            if dominates_unchecked(q, p) || (j < i && q == p) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

/// Observed `(x, f(x))` pairs, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    xs: Vec<DesignPoint>,
    ys: Vec<ObjectiveVector>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(xs: Vec<DesignPoint>, ys: Vec<ObjectiveVector>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        let mut data = Self::new();
        for (x, y) in xs.into_iter().zip(ys) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    /// Appends an observation. Rejects non-finite objective values and
    /// shape changes relative to earlier entries.
    pub fn push(&mut self, x: DesignPoint, y: ObjectiveVector) -> Result<()> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective vector".into()));
        }
        if let (Some(x0), Some(y0)) = (self.xs.first(), self.ys.first()) {
            if x.len() != x0.len() {
                return Err(Error::DimensionMismatch {
                    expected: x0.len(),
                    got: x.len(),
                });
            }
            if y.len() != y0.len() {
                return Err(Error::DimensionMismatch {
                    expected: y0.len(),
                    got: y.len(),
                });
            }
        }
        self.xs.push(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn xs(&self) -> &[DesignPoint] {
        &self.xs
    }

    pub fn ys(&self) -> &[ObjectiveVector] {
        &self.ys
    }

    pub fn eval_count(&self) -> usize {
        self.xs.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn n_objectives(&self) -> Option<usize> {
        self.ys.first().map(Vec::len)
    }

    /// Column `m` of the objective values.
    pub fn objective(&self, m: usize) -> Vec<f64> {
        self.ys.iter().map(|y| y[m]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DesignPoint, &ObjectiveVector)> {
        self.xs.iter().zip(&self.ys)
    }

    pub fn pareto_archive(&self) -> ParetoArchive {
        let idx = pareto_filter(&self.ys);
        ParetoArchive {
            front: idx.iter().map(|&i| self.ys[i].clone()).collect(),
            set: idx.iter().map(|&i| self.xs[i].clone()).collect(),
        }
    }
}

/// Mutually non-dominated objective vectors with their preimages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    front: Vec<ObjectiveVector>,
    set: Vec<DesignPoint>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `(x, y)` unless it is dominated by or equal to a member.
    /// Members dominated by `y` are evicted. Returns whether it was added.
    pub fn insert(&mut self, x: DesignPoint, y: ObjectiveVector) -> bool {
        if self
            .front
            .iter()
            .any(|f| f == &y || dominates_unchecked(f, &y))
        {
            return false;
        }
        let mut i = 0;
        while i < self.front.len() {
            if dominates_unchecked(&y, &self.front[i]) {
                self.front.remove(i);
                self.set.remove(i);
            } else {
                i += 1;
            }
        }
        self.front.push(y);
        self.set.push(x);
        true
    }

    pub fn front(&self) -> &[ObjectiveVector] {
        &self.front
    }

    pub fn set(&self) -> &[DesignPoint] {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.front.len()
    }

    pub fn is_empty(&self) -> bool {
        self.front.is_empty()
    }
}

/// Componentwise best (ideal) and worst (nadir) observed objective values.
pub fn ideal_nadir(data: &Dataset) -> Result<(ObjectiveVector, ObjectiveVector)> {
    let m = data
        .n_objectives()
        .ok_or_else(|| Error::InsufficientData("ideal/nadir of an empty dataset".into()))?;
    let mut ideal = vec![f64::INFINITY; m];
    let mut nadir = vec![f64::NEG_INFINITY; m];
    for y in data.ys() {
        for k in 0..m {
            ideal[k] = ideal[k].min(y[k]);
            nadir[k] = nadir[k].max(y[k]);
        }
    }
    Ok((ideal, nadir))
}

/// Shifts every objective so that all observed values are non-negative.
/// The returned offset is what was added; subtract it to recover raw values.
pub fn offset_nonnegative(data: &Dataset) -> (Dataset, ObjectiveVector) {
    let Ok((ideal, _)) = ideal_nadir(data) else {
        return (data.clone(), Vec::new());
    };
    let offset: Vec<f64> = ideal.iter().map(|&lo| (-lo).max(0.0)).collect();
    let shifted = Dataset {
        xs: data.xs.clone(),
        ys: data
            .ys
            .iter()
            .map(|y| y.iter().zip(&offset).map(|(v, o)| v + o).collect())
            .collect(),
    };
    (shifted, offset)
}
