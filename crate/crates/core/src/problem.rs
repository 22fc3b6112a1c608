//! Grids, coefficient vectors and training sets.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Dyadic partition of `(m1, m2]` into `B = (m2 - m1) * 2^n` half-open bins.
///
/// Bins are numbered `1..=B`; bin `t` is `(m1 + (t-1)/2^n, m1 + t/2^n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    m1: i64,
    m2: i64,
    n: u32,
    eps: f64,
}

impl GridSpec {
    /// `eps` must satisfy `0 < eps <= 2^-n`. At `eps = 2^-n` the offset point of a
    /// bin is its own right endpoint, which is still inside the right-closed bin.
    pub fn new(m1: i64, m2: i64, n: u32, eps: f64) -> Result<Self> {
        if m1 >= m2 {
            return Err(Error::InvalidGrid(format!("m1 = {m1} must be below m2 = {m2}")));
        }
        if n > 40 {
            return Err(Error::InvalidGrid(format!("level n = {n} is too fine")));
        }
        let width = (-(n as f64)).exp2();
        if !(eps > 0.0 && eps <= width) {
            return Err(Error::InvalidGrid(format!(
                "eps = {eps} must lie in (0, {width}] at level {n}"
            )));
        }
        Ok(Self { m1, m2, n, eps })
    }

    /// Grid with the default offset `eps = 2^-(n+4)`.
    pub fn with_default_eps(m1: i64, m2: i64, n: u32) -> Result<Self> {
        Self::new(m1, m2, n, (-((n + 4) as f64)).exp2())
    }

    pub fn m1(&self) -> i64 {
        self.m1
    }

    pub fn m2(&self) -> i64 {
        self.m2
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Bin count `B`.
    pub fn bins(&self) -> usize {
        ((self.m2 - self.m1) as usize) << self.n
    }

    /// Bin width `2^-n`.
    pub fn width(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    pub fn contains(&self, a: f64) -> bool {
        a > self.m1 as f64 && a <= self.m2 as f64
    }

    /// 1-based index of the bin containing `a`.
    pub fn bin_index(&self, a: f64) -> Result<usize> {
        if !self.contains(a) {
            return Err(Error::OutOfGrid {
                coord: 0,
                value: a,
                m1: self.m1,
                m2: self.m2,
            });
        }
        Ok(self.bin_unchecked(a) + 1)
    }

    /// 0-based bin position; `a` is assumed to be inside the grid.
    pub(crate) fn bin_unchecked(&self, a: f64) -> usize {
        let raw = ((a - self.m1 as f64) * (self.n as f64).exp2()).ceil();
        (raw.max(1.0) as usize).min(self.bins()) - 1
    }

    /// Bounds `(lo, hi]` of bin `t` (1-based).
    pub fn bin_interval(&self, t: usize) -> Result<(f64, f64)> {
        if t == 0 || t > self.bins() {
            return Err(Error::BinOutOfRange { t, bins: self.bins() });
        }
        Ok(self.interval_unchecked(t - 1))
    }

    pub(crate) fn interval_unchecked(&self, pos: usize) -> (f64, f64) {
        let w = self.width();
        let lo = self.m1 as f64 + pos as f64 * w;
        (lo, lo + w)
    }

    /// Same bounds at level `n`, with the offset scaled by the change in bin width.
    pub fn at_level(&self, n: u32) -> Result<Self> {
        let eps = self.eps * ((self.n as f64) - (n as f64)).exp2();
        Self::new(self.m1, self.m2, n, eps)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}] n={} eps={}", self.m1, self.m2, self.n, self.eps)
    }
}

/// Finite coefficient vector indexed by an ordered, duplicate-free index set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} indices for {} values",
                indices.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if !seen.insert(i) {
                return Err(Error::Domain(format!("duplicate coordinate index {i}")));
            }
        }
        Ok(Self { indices, values })
    }

    /// Vector indexed by positions `0..values.len()`.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            indices: (0..values.len()).collect(),
            values,
        }
    }

    /// Copy of `self` with new values on the same index set.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Ok(Self {
            indices: self.indices.clone(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_index_set(&self, other: &Self) -> bool {
        self.indices == other.indices
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            indices: self.indices.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Paired `(clean, noisy)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pairs: Vec<(CoefficientVector, CoefficientVector)>,
}

impl TrainingSet {
    /// Requires at least one pair. Index-set agreement is checked by
    /// [`validate_problem`] so that all structural problems are reported together.
    pub fn new(pairs: Vec<(CoefficientVector, CoefficientVector)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Domain("training set needs at least one pair".into()));
        }
        Ok(Self { pairs })
    }

    /// Convenience constructor from raw value arrays indexed by position.
    pub fn from_arrays(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(f, g)| (CoefficientVector::from_values(f), CoefficientVector::from_values(g)))
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[(CoefficientVector, CoefficientVector)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of coordinates, taken from the first clean vector.
    pub fn dim(&self) -> usize {
        self.pairs[0].0.len()
    }

    pub fn indices(&self) -> &[usize] {
        self.pairs[0].0.indices()
    }

    /// `(f_i, g_i)` values at coordinate position `j` for every pair.
    pub fn slice(&self, j: usize) -> Vec<(f64, f64)> {
        self.pairs
            .iter()
            .map(|(f, g)| (f.values()[j], g.values()[j]))
            .collect()
    }

    /// `sum_i ||g_i - f_i||^2`.
    pub fn noisy_error(&self) -> f64 {
        self.pairs.iter().map(|(f, g)| f.dist_sq(g)).sum()
    }
}

/// One problem found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IndexMismatch { pair: usize, which: &'static str },
    OutOfGrid { pair: usize, which: &'static str, coord: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexMismatch { pair, which } => {
                write!(f, "pair {pair}: {which} vector has a different index set")
            }
            Violation::OutOfGrid { pair, which, coord, value } => {
                write!(f, "pair {pair}: {which} value {value} at coordinate {coord} is off-grid")
            }
        }
    }
}

/// Checks that all vectors share one index set and every value lies in `(m1, m2]`.
pub fn validate_problem(ts: &TrainingSet, grid: &GridSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let reference = &ts.pairs[0].0;
    for (i, (f, g)) in ts.pairs.iter().enumerate() {
        for (which, v) in [("clean", f), ("noisy", g)] {
            if !v.same_index_set(reference) {
                out.push(Violation::IndexMismatch { pair: i, which });
                continue;
            }
            for (&coord, &value) in v.indices().iter().zip(v.values()) {
                if !grid.contains(value) {
                    out.push(Violation::OutOfGrid { pair: i, which, coord, value });
                }
            }
        }
    }
    out
}

/// [`validate_problem`] as a `Result`.
pub fn ensure_valid(ts: &TrainingSet, grid: &GridSpec) -> Result<()> {
    let v = validate_problem(ts, grid);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(v))
    }
}

/// Checks that all vectors share one index set, ignoring grid membership.
pub fn ensure_consistent(ts: &TrainingSet) -> Result<()> {
    let reference = &ts.pairs[0].0;
    let mut out = Vec::new();
    for (i, (f, g)) in ts.pairs.iter().enumerate() {
        if !f.same_index_set(reference) {
            out.push(Violation::IndexMismatch { pair: i, which: "clean" });
        }
        if !g.same_index_set(reference) {
            out.push(Violation::IndexMismatch { pair: i, which: "noisy" });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(out))
    }
}
