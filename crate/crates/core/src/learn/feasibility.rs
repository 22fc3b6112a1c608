//! Feasibility of a candidate assignment as a system of difference constraints.
//!
//! Requiring bin `r_i` to win the penalized argmin for pair `i` gives
//! `x_r + q_i(r) <= x_u + q_i(u)` for every other bin `u`, i.e. `x_r - x_u <= q_i(u) - q_i(r)`.
//! Quasiconvexity with a fixed pivot adds `x_{t+1} <= x_t` left of the pivot and
//! `x_t <= x_{t+1}` right of it. Every constraint bounds a difference of two
//! unknowns, so feasibility is a negative-cycle test on the constraint graph and
//! shortest-path distances give a solution.

use std::collections::VecDeque;

use crate::error::Result;
use crate::problem::GridSpec;

use super::kn::{slice_data, PairData};

/// Per pair, the 1-based bin assumed to win the penalized argmin.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidateAssignment {
    pub bins: Vec<usize>,
}

impl CandidateAssignment {
    /// Every pair assigned to the bin of its noisy value.
    pub fn data_bins(slice: &[(f64, f64)], grid: &GridSpec) -> Self {
        Self {
            bins: slice.iter().map(|&(_, g)| grid.bin_unchecked(g) + 1).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityConfig {
    /// Margin on comparisons the argmin tie-break would otherwise settle against
    /// the assigned bin.
    pub strict_margin: f64,
    /// Margin on the monotone constraints; zero keeps quasiconvexity non-strict.
    pub quasi_margin: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            strict_margin: 1e-7,
            quasi_margin: 0.0,
        }
    }
}

/// A feasible step vector for an assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePoint {
    pub x: Vec<f64>,
    /// 1-based pivot bin of the monotone decomposition used.
    pub pivot: usize,
    /// Constraints holding with equality (up to `1e-9`) at `x`.
    pub active: usize,
}

const RELAX_TOL: f64 = 1e-13;
const ACTIVE_TOL: f64 = 1e-9;

/// Does the argmin tie-break prefer `u` over `r` for a pair whose data bin is `home`?
pub(crate) fn tie_prefers(u: usize, r: usize, home: usize) -> bool {
    u == home || (r != home && u < r)
}

/// Dense bound matrix: `w[u * b + v]` bounds `x_v - x_u` from above.
#[derive(Debug, Clone)]
pub(crate) struct DiffSystem {
    b: usize,
    w: Vec<f64>,
    quasi_margin: f64,
}

impl DiffSystem {
    pub fn new(pairs: &[PairData], assign: &[usize], b: usize, cfg: &FeasibilityConfig) -> Self {
        let mut w = vec![f64::INFINITY; b * b];
        for (p, &r) in pairs.iter().zip(assign) {
            for u in 0..b {
                if u == r {
                    continue;
                }
                let margin = if tie_prefers(u, r, p.home) { cfg.strict_margin } else { 0.0 };
                let bound = p.q[u] - p.q[r] - margin;
                let e = &mut w[u * b + r];
                if bound < *e {
                    *e = bound;
                }
            }
        }
        Self {
            b,
            w,
            quasi_margin: cfg.quasi_margin,
        }
    }

    pub fn edge_list(&self, pivot: Option<usize>) -> Vec<(usize, usize, f64)> {
        let b = self.b;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for u in 0..b {
            for v in 0..b {
                let w = self.w[u * b + v];
                if w.is_finite() {
                    edges.push((u, v, w));
                }
            }
        }
        if let Some(p) = pivot {
            for t in 0..b.saturating_sub(1) {
                if t < p {
                    edges.push((t, t + 1, -self.quasi_margin));
                } else {
                    edges.push((t + 1, t, -self.quasi_margin));
                }
            }
        }
        edges
    }

    /// Largest solution below `start`, or `None` on a negative cycle.
    pub fn solve(&self, pivot: Option<usize>, start: &[f64]) -> Option<Vec<f64>> {
        let b = self.b;
        let edges = self.edge_list(pivot);
        let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); b];
        for &(u, v, w) in &edges {
            out[u].push((v, w));
        }
        let mut d = start.to_vec();
        let mut queue: VecDeque<usize> = (0..b).collect();
        let mut in_queue = vec![true; b];
        let mut count = vec![0usize; b];
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &(v, w) in &out[u] {
                let cand = d[u] + w;
                if cand < d[v] - RELAX_TOL * d[v].abs().max(1.0) {
                    d[v] = cand;
                    if !in_queue[v] {
                        count[v] += 1;
                        if count[v] > b {
                            return None;
                        }
                        in_queue[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        if let Some(p) = pivot {
            // make the monotone runs exact despite the relaxation tolerance
            for t in p + 1..b {
                d[t] = d[t].max(d[t - 1] + self.quasi_margin);
            }
            for t in (0..p).rev() {
                d[t] = d[t].max(d[t + 1] + self.quasi_margin);
            }
        }
        Some(d)
    }

    pub fn active_count(&self, x: &[f64], pivot: usize) -> usize {
        self.edge_list(Some(pivot))
            .into_iter()
            .filter(|&(u, v, w)| (x[v] - x[u] - w).abs() <= ACTIVE_TOL)
            .count()
    }

    /// Satisfies all pair constraints and the pivot structure to `tol`.
    pub fn satisfied(&self, x: &[f64], pivot: usize, tol: f64) -> bool {
        self.edge_list(Some(pivot))
            .into_iter()
            .all(|(u, v, w)| x[v] - x[u] <= w + tol)
    }
}

/// Shifts `x` so that its smallest entry is zero.
pub(crate) fn anchor(x: &mut [f64]) {
    let m = x.iter().copied().fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        x.iter_mut().for_each(|v| *v -= m);
    }
}

/// First feasible pivot for the assignment, trying `pivots` in order.
pub(crate) fn find_feasible(
    sys: &DiffSystem,
    b: usize,
    start: &[f64],
    pivots: impl IntoIterator<Item = usize>,
) -> Option<(Vec<f64>, usize)> {
    sys.solve(None, start)?;
    pivots
        .into_iter()
        .find_map(|p| sys.solve(Some(p), start).map(|x| (x, p)))
        .filter(|(x, _)| x.len() == b)
}

/// Finds a step vector under which every pair's assigned bin wins the
/// penalized argmin (tie-break included) and which is quasiconvex.
///
/// Returns `None` when no such vector exists. The returned point is the largest
/// solution below zero, shifted so its minimum is zero.
pub fn feasibility_solve(
    assignment: &CandidateAssignment,
    slice: &[(f64, f64)],
    grid: &GridSpec,
    cfg: &FeasibilityConfig,
) -> Result<Option<FeasiblePoint>> {
    let pairs = slice_data(slice, grid)?;
    let b = grid.bins();
    if assignment.bins.len() != pairs.len() || assignment.bins.iter().any(|&t| t == 0 || t > b) {
        return Err(crate::Error::Shape(format!(
            "assignment {:?} does not fit {} pairs on {b} bins",
            assignment.bins,
            pairs.len()
        )));
    }
    let assign: Vec<usize> = assignment.bins.iter().map(|t| t - 1).collect();
    let sys = DiffSystem::new(&pairs, &assign, b, cfg);
    Ok(find_feasible(&sys, b, &vec![0.0; b], 0..b).map(|(mut x, p)| {
        anchor(&mut x);
        let active = sys.active_count(&x, p);
        FeasiblePoint { x, pivot: p + 1, active }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepreg::{argmin_penalized, is_quasiconvex, StepRegularizer};

    #[test]
    fn data_bins_feasible_at_zero() {
        let grid = GridSpec::with_default_eps(0, 2, 1).unwrap();
        let slice = [(0.3, 1.6), (1.9, 0.2)];
        let a = CandidateAssignment::data_bins(&slice, &grid);
        let p = feasibility_solve(&a, &slice, &grid, &FeasibilityConfig::default())
            .unwrap()
            .unwrap();
        assert!(p.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn worked_example_left_bin() {
        let grid = GridSpec::with_default_eps(0, 1, 1).unwrap();
        let slice = [(0.25, 0.75)];
        let a = CandidateAssignment { bins: vec![1] };
        let p = feasibility_solve(&a, &slice, &grid, &FeasibilityConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(p.x[0], 0.0);
        assert!(p.x[1] - p.x[0] >= 0.0625);
        assert!((p.x[1] - 0.0625).abs() < 1e-6);
        let reg = StepRegularizer::new(grid, vec![p.x.clone()]).unwrap();
        assert_eq!(argmin_penalized(0.75, &reg, 0).unwrap().bin, 1);
    }

    #[test]
    fn equal_data_different_bins_is_infeasible() {
        let grid = GridSpec::with_default_eps(0, 1, 2).unwrap();
        let slice = [(0.1, 0.6), (0.9, 0.6)];
        let a = CandidateAssignment { bins: vec![1, 4] };
        assert!(feasibility_solve(&a, &slice, &grid, &FeasibilityConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn feasible_points_realize_assignment() {
        let grid = GridSpec::with_default_eps(0, 1, 2).unwrap();
        let slice = [(0.1, 0.45), (0.6, 0.6)];
        let a = CandidateAssignment { bins: vec![1, 3] };
        let p = feasibility_solve(&a, &slice, &grid, &FeasibilityConfig::default())
            .unwrap()
            .unwrap();
        assert!(is_quasiconvex(&p.x));
        let reg = StepRegularizer::new(grid, vec![p.x]).unwrap();
        assert_eq!(argmin_penalized(0.45, &reg, 0).unwrap().bin, 1);
        assert_eq!(argmin_penalized(0.6, &reg, 0).unwrap().bin, 3);
    }
}
