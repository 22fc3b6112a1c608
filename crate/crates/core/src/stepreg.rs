//! Per-coordinate quasiconvex step regularizers and their penalized argmin.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{ensure_valid, CoefficientVector, GridSpec, TrainingSet};

/// Values closer than this (relative to `max(1, |v|)`) are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

/// `true` iff `a_s <= max(a_r, a_t)` for every `r < s < t`.
///
/// Linear scan: an interior entry is fine as long as it does not exceed the
/// smallest entry on its left or the smallest entry on its right.
pub fn is_quasiconvex(a: &[f64]) -> bool {
    quasiconvex_violation(a).is_none()
}

/// First 0-based position violating quasiconvexity, if any.
pub fn quasiconvex_violation(a: &[f64]) -> Option<usize> {
    let b = a.len();
    if b < 3 {
        return None;
    }
    let mut suffix_min = vec![f64::INFINITY; b];
    for s in (0..b - 1).rev() {
        suffix_min[s] = suffix_min[s + 1].min(a[s + 1]);
    }
    let mut prefix_min = a[0];
    for s in 1..b - 1 {
        if a[s] > prefix_min.max(suffix_min[s]) {
            return Some(s);
        }
        prefix_min = prefix_min.min(a[s]);
    }
    None
}

/// Step function per coordinate on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRegularizer {
    grid: GridSpec,
    coeffs: Vec<Vec<f64>>,
}

impl StepRegularizer {
    /// Fails unless every array has `grid.bins()` entries and is quasiconvex.
    pub fn new(grid: GridSpec, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        for (j, c) in coeffs.iter().enumerate() {
            if c.len() != grid.bins() {
                return Err(Error::Shape(format!(
                    "coordinate {j} has {} coefficients, grid has {} bins",
                    c.len(),
                    grid.bins()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("coordinate {j} has non-finite coefficients")));
            }
            if let Some(s) = quasiconvex_violation(c) {
                return Err(Error::NotQuasiconvex { coord: j, bin: s + 1 });
            }
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec, dim: usize) -> Self {
        Self {
            grid,
            coeffs: vec![vec![0.0; grid.bins()]; dim],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficients `C_1..C_B` of coordinate `j` (0-based array).
    pub fn coeffs(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    pub fn all_coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// `psi_j(x)`.
    pub fn evaluate(&self, j: usize, x: f64) -> Result<f64> {
        if j >= self.dim() {
            return Err(Error::Shape(format!("coordinate {j} out of {}", self.dim())));
        }
        if !self.grid.contains(x) {
            return Err(Error::OutOfGrid {
                coord: j,
                value: x,
                m1: self.grid.m1(),
                m2: self.grid.m2(),
            });
        }
        Ok(self.coeffs[j][self.grid.bin_unchecked(x)])
    }
}

/// Approximate minimizer of a quadratic over one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// 1-based bin index.
    pub bin: usize,
    pub x: f64,
    /// `(x - g)^2`.
    pub q: f64,
}

/// Candidate points of `(x - g)^2` on every bin: right endpoints left of the
/// bin of `g`, `g` itself in its own bin, left endpoint plus `eps` to the right.
pub fn candidate_points(g: f64, grid: &GridSpec) -> Result<Vec<Candidate>> {
    if !grid.contains(g) {
        return Err(Error::OutOfGrid {
            coord: 0,
            value: g,
            m1: grid.m1(),
            m2: grid.m2(),
        });
    }
    Ok(candidates_centered(g, grid)
        .into_iter()
        .enumerate()
        .map(|(pos, (x, q))| Candidate { bin: pos + 1, x, q })
        .collect())
}

/// Candidate `(x_t, (x_t - c)^2)` per bin for a center `c` that may lie off-grid.
pub(crate) fn candidates_centered(c: f64, grid: &GridSpec) -> Vec<(f64, f64)> {
    let home = data_bin(c, grid);
    (0..grid.bins())
        .map(|pos| {
            let x = candidate_x(c, pos, home, grid);
            (x, (x - c) * (x - c))
        })
        .collect()
}

/// Bin holding the center, or `None` when the center lies off-grid.
pub(crate) fn data_bin(c: f64, grid: &GridSpec) -> Option<usize> {
    grid.contains(c).then(|| grid.bin_unchecked(c))
}

pub(crate) fn candidate_x(c: f64, pos: usize, home: Option<usize>, grid: &GridSpec) -> f64 {
    let (lo, hi) = grid.interval_unchecked(pos);
    match home {
        Some(s) if pos == s => c,
        Some(s) if pos < s => hi,
        Some(_) => lo + grid.eps(),
        None if hi < c => hi,
        None => lo + grid.eps(),
    }
}

/// Result of a penalized argmin over candidate points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmin {
    pub x: f64,
    pub value: f64,
    /// 1-based bin of `x`.
    pub bin: usize,
}

/// Index of the minimum of `vals` with ties (within [`TIE_TOL`]) going to
/// `preferred` first and then to the smallest index.
pub(crate) fn tie_break_min(vals: &[f64], preferred: Option<usize>) -> usize {
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.abs().max(1.0);
    if let Some(s) = preferred {
        if vals[s] <= best + tol {
            return s;
        }
    }
    vals.iter().position(|&v| v <= best + tol).unwrap_or(0)
}

/// Minimizer of `k2 (x - c)^2 + psi(x)` over `(m1, m2]` among candidate points.
pub(crate) fn argmin_scaled(c: f64, k2: f64, coeffs: &[f64], grid: &GridSpec) -> Argmin {
    let home = data_bin(c, grid);
    let vals: Vec<f64> = (0..grid.bins())
        .map(|pos| {
            let x = candidate_x(c, pos, home, grid);
            k2 * (x - c) * (x - c) + coeffs[pos]
        })
        .collect();
    let pos = tie_break_min(&vals, home);
    Argmin {
        x: candidate_x(c, pos, home, grid),
        value: vals[pos],
        bin: pos + 1,
    }
}

/// Minimizer of `(x - g)^2 + psi_j(x)` among candidate points.
pub fn argmin_penalized(g: f64, reg: &StepRegularizer, j: usize) -> Result<Argmin> {
    if j >= reg.dim() {
        return Err(Error::Shape(format!("coordinate {j} out of {}", reg.dim())));
    }
    if !reg.grid.contains(g) {
        return Err(Error::OutOfGrid {
            coord: j,
            value: g,
            m1: reg.grid.m1(),
            m2: reg.grid.m2(),
        });
    }
    Ok(argmin_scaled(g, 1.0, &reg.coeffs[j], &reg.grid))
}

/// Coordinate-wise [`argmin_penalized`].
pub fn denoise_with_step(g: &CoefficientVector, reg: &StepRegularizer) -> Result<CoefficientVector> {
    if g.len() != reg.dim() {
        return Err(Error::Shape(format!(
            "signal has {} coordinates, regularizer has {}",
            g.len(),
            reg.dim()
        )));
    }
    let values: Result<Vec<f64>> = g
        .values()
        .par_iter()
        .enumerate()
        .map(|(j, &v)| {
            argmin_penalized(v, reg, j)
                .map(|a| a.x)
                .map_err(|e| match e {
                    Error::OutOfGrid { value, m1, m2, .. } => Error::OutOfGrid {
                        coord: g.indices()[j],
                        value,
                        m1,
                        m2,
                    },
                    other => other,
                })
        })
        .collect();
    g.with_values(values?)
}

/// `sum_i ||denoise_with_step(g_i) - f_i||^2`.
pub fn objective_i(reg: &StepRegularizer, ts: &TrainingSet) -> Result<f64> {
    ensure_valid(ts, &reg.grid)?;
    let mut total = 0.0;
    for (f, g) in ts.pairs() {
        total += denoise_with_step(g, reg)?.dist_sq(f);
    }
    Ok(total)
}

/// Per-coordinate contribution to [`objective_i`], for an already validated set.
pub(crate) fn coordinate_objective(coeffs: &[f64], slice: &[(f64, f64)], grid: &GridSpec) -> f64 {
    slice
        .iter()
        .map(|&(f, g)| {
            let x = argmin_scaled(g, 1.0, coeffs, grid).x;
            (x - f) * (x - f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exhaustive(a: &[f64]) -> bool {
        let b = a.len();
        for r in 0..b {
            for s in r + 1..b {
                for t in s + 1..b {
                    if a[s] > a[r].max(a[t]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn quasiconvex_examples() {
        assert!(is_quasiconvex(&[3.0, 1.0, 2.0, 5.0]));
        assert!(exhaustive(&[3.0, 1.0, 2.0, 5.0]));
        assert!(!is_quasiconvex(&[1.0, 3.0, 2.0]));
        assert!(is_quasiconvex(&[4.0; 6]));
        assert!(is_quasiconvex(&[1.0]));
        assert!(!is_quasiconvex(&[0.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn constructor_rejects_violations() {
        let grid = GridSpec::with_default_eps(0, 1, 2).unwrap();
        assert!(StepRegularizer::new(grid, vec![vec![0.0, 1.0, 0.5, 2.0]]).is_err());
        assert!(StepRegularizer::new(grid, vec![vec![0.0, 1.0]]).is_err());
        assert!(StepRegularizer::new(grid, vec![vec![2.0, 1.0, 0.5, 2.0]]).is_ok());
    }

    #[test]
    fn evaluate_is_step_lookup() {
        let grid = GridSpec::with_default_eps(0, 1, 1).unwrap();
        let reg = StepRegularizer::new(grid, vec![vec![0.0, 0.1]]).unwrap();
        assert_eq!(reg.evaluate(0, 0.3).unwrap(), 0.0);
        assert_eq!(reg.evaluate(0, 0.5).unwrap(), 0.0);
        assert_eq!(reg.evaluate(0, 1.0).unwrap(), 0.1);
        assert!(reg.evaluate(0, 0.0).is_err());
    }

    #[test]
    fn candidate_layout() {
        let grid = GridSpec::with_default_eps(1, 3, 1).unwrap();
        let c = candidate_points(1.3, &grid).unwrap();
        assert_eq!(c[0].x, 1.3);
        assert_eq!(c[0].q, 0.0);
        for (t, cand) in c.iter().enumerate().skip(1) {
            assert_eq!(cand.x, 1.0 + t as f64 * 0.5 + grid.eps());
        }
        let c = candidate_points(2.9, &grid).unwrap();
        assert_eq!(c[0].x, 1.5);
        assert_eq!(c[2].x, 2.5);
        assert_eq!(c[3].q, 0.0);
    }

    #[test]
    fn argmin_examples() {
        let grid = GridSpec::with_default_eps(0, 1, 1).unwrap();
        let reg = StepRegularizer::new(grid, vec![vec![0.0, 0.1]]).unwrap();
        let a = argmin_penalized(0.75, &reg, 0).unwrap();
        assert_eq!(a.x, 0.5);
        assert_eq!(a.bin, 1);
        assert_eq!(a.value, 0.0625);

        let zero = StepRegularizer::zeros(grid, 1);
        assert_eq!(argmin_penalized(0.75, &zero, 0).unwrap().x, 0.75);

        // exact tie between the data bin and bin 1 goes to the data bin
        let tie = StepRegularizer::new(grid, vec![vec![0.0, 0.0625]]).unwrap();
        assert_eq!(argmin_penalized(0.75, &tie, 0).unwrap().bin, 2);
    }

    #[test]
    fn off_grid_center_uses_one_sided_candidates() {
        let grid = GridSpec::with_default_eps(0, 1, 1).unwrap();
        let left = candidates_centered(-1.0, &grid);
        assert_eq!(left[0].0, grid.eps());
        assert_eq!(left[1].0, 0.5 + grid.eps());
        let right = candidates_centered(4.0, &grid);
        assert_eq!(right[0].0, 0.5);
        assert_eq!(right[1].0, 1.0);
    }

    #[test]
    fn objective_zero_regularizer() {
        let grid = GridSpec::with_default_eps(0, 2, 2).unwrap();
        let ts = TrainingSet::from_arrays(vec![
            (vec![0.5, 1.0], vec![0.7, 1.5]),
            (vec![1.2, 0.1], vec![1.2, 0.1]),
        ])
        .unwrap();
        let zero = StepRegularizer::zeros(grid, 2);
        let v = objective_i(&zero, &ts).unwrap();
        assert!((v - ts.noisy_error()).abs() < 1e-15);
    }
}
