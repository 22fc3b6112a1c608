//! Minimizing `K_n` inside the polytope of a fixed assignment.
//!
//! With the assignment fixed, the inner minimum of pair `i` is attained at `r_i`,
//! so `K_n` becomes the convex quadratic `sum_i (x_{r_i} - x_{b_i} + q_i(r_i) - gap_i)^2`
//! over difference constraints. The quadratic program is solved by ADMM and the
//! result is pulled back onto the polytope with the shortest-path repair.

use nalgebra::{DMatrix, DVector};

use super::feasibility::{anchor, DiffSystem};
use super::kn::{KnObjective, PairData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub iters: usize,
    pub rho: f64,
    /// Extra pivots tried besides the one the search found.
    pub max_extra_pivots: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            iters: 400,
            rho: 1.0,
            max_extra_pivots: 3,
        }
    }
}

/// Returns a point of the assignment's polytope with `K_n` no larger than at `x0`.
pub(crate) fn refine(
    pairs: &[PairData],
    assign: &[usize],
    sys: &DiffSystem,
    x0: &[f64],
    pivot: usize,
    cfg: &RefineConfig,
) -> Vec<f64> {
    let b = x0.len();
    let kn = KnObjective::from_pairs(b, pairs.to_vec());
    let mut best = (kn.value(x0), x0.to_vec());
    if best.0 <= 1e-15 {
        return best.1;
    }
    let mut pivots = vec![pivot];
    for &r in assign {
        if pivots.len() > cfg.max_extra_pivots {
            break;
        }
        if !pivots.contains(&r) {
            pivots.push(r);
        }
    }
    for p in pivots {
        let Some(start) = sys.solve(Some(p), x0) else { continue };
        let edges = sys.edge_list(Some(p));
        let qp = admm(pairs, assign, &edges, &start, cfg);
        if let Some(mut x) = sys.solve(Some(p), &qp) {
            anchor(&mut x);
            let v = kn.value(&x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    best.1
}

fn admm(
    pairs: &[PairData],
    assign: &[usize],
    edges: &[(usize, usize, f64)],
    start: &[f64],
    cfg: &RefineConfig,
) -> Vec<f64> {
    let b = start.len();
    let sigma = 1e-6;
    let rho = cfg.rho;
    let mut pq = DMatrix::<f64>::zeros(b, b);
    let mut lin = DVector::<f64>::zeros(b);
    for (p, &r) in pairs.iter().zip(assign) {
        if r == p.target {
            continue;
        }
        let c = p.q[r] - p.gap;
        let (i, j) = (r, p.target);
        pq[(i, i)] += 2.0;
        pq[(j, j)] += 2.0;
        pq[(i, j)] -= 2.0;
        pq[(j, i)] -= 2.0;
        lin[i] += 2.0 * c;
        lin[j] -= 2.0 * c;
    }
    let mut m = pq.clone();
    for i in 0..b {
        m[(i, i)] += sigma;
    }
    for &(u, v, _) in edges {
        m[(u, u)] += rho;
        m[(v, v)] += rho;
        m[(u, v)] -= rho;
        m[(v, u)] -= rho;
    }
    let Some(chol) = m.cholesky() else {
        return start.to_vec();
    };
    let apply = |x: &DVector<f64>| -> Vec<f64> { edges.iter().map(|&(u, v, _)| x[v] - x[u]).collect() };
    let mut x = DVector::from_column_slice(start);
    let mut z = apply(&x);
    let mut y = vec![0.0; edges.len()];
    for _ in 0..cfg.iters {
        let mut rhs = &x * sigma - &lin;
        for (k, &(u, v, _)) in edges.iter().enumerate() {
            let s = rho * z[k] - y[k];
            rhs[v] += s;
            rhs[u] -= s;
        }
        x = chol.solve(&rhs);
        let ax = apply(&x);
        for (k, &(_, _, w)) in edges.iter().enumerate() {
            let zn = (ax[k] + y[k] / rho).min(w);
            y[k] += rho * (ax[k] - zn);
            z[k] = zn;
        }
    }
    x.iter().copied().collect()
}
