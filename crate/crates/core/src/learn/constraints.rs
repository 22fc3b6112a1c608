//! Quasiconvexity as explicit constraints, and the unimodal projection.

/// The triple constraints `|x_r - x_t| + x_r + x_t - 2 x_s >= 0` for `r < s < t`
/// over `1..=dim`, which together say `x_s <= max(x_r, x_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuasiconvexConstraintSystem {
    dim: usize,
}

impl QuasiconvexConstraintSystem {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All `(r, s, t)` with `1 <= r < s < t <= dim`, in lexicographic order.
    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for r in 1..=self.dim {
            for s in r + 1..=self.dim {
                for t in s + 1..=self.dim {
                    out.push((r, s, t));
                }
            }
        }
        out
    }

    /// Left-hand side of the smooth-form constraint for one triple (1-based).
    pub fn residual(x: &[f64], (r, s, t): (usize, usize, usize)) -> f64 {
        let (xr, xs, xt) = (x[r - 1], x[s - 1], x[t - 1]);
        (xr - xt).abs() + xr + xt - 2.0 * xs
    }

    /// Every triple residual is `>= -tol`.
    pub fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.triples()
            .into_iter()
            .all(|tr| Self::residual(x, tr) >= -tol)
    }
}

/// Least-squares fit of a non-increasing sequence (pool adjacent violators).
fn antitone_fit(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.pop();
            let n = na + nb;
            *blocks.last_mut().unwrap() = ((a * na as f64 + b * nb as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v, n))
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Closest quasiconvex sequence to `y` in the Euclidean norm.
///
/// A quasiconvex sequence is a non-increasing run followed by a non-decreasing
/// run with no coupling between the two, so each split point is fitted
/// independently and the best split is kept.
pub fn project_unimodal(y: &[f64]) -> Vec<f64> {
    let b = y.len();
    if b < 3 {
        return y.to_vec();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=b {
        let mut cand = antitone_fit(&y[..k]);
        let rev: Vec<f64> = y[k..].iter().rev().copied().collect();
        let mut right = antitone_fit(&rev);
        right.reverse();
        cand.extend_from_slice(&right);
        let d = sq_dist(&cand, y);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, cand));
        }
    }
    best.unwrap().1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepreg::is_quasiconvex;

    #[test]
    fn triple_count_and_order() {
        let sys = QuasiconvexConstraintSystem::new(4);
        assert_eq!(sys.triples(), vec![(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]);
        assert_eq!(QuasiconvexConstraintSystem::new(7).triples().len(), 35);
    }

    #[test]
    fn smooth_form_matches_max() {
        let x = [3.0, 1.0, 2.0, 5.0];
        let sys = QuasiconvexConstraintSystem::new(4);
        assert!(sys.satisfied(&x, 0.0));
        assert!(!sys.satisfied(&[1.0, 3.0, 2.0], 0.0));
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let y = [0.0, 2.0, -1.0, 3.0, 1.0, 4.0];
        let p = project_unimodal(&y);
        assert!(is_quasiconvex(&p));
        assert_eq!(project_unimodal(&p), p);
        let q = [5.0, 3.0, 1.0, 2.0, 4.0];
        assert_eq!(project_unimodal(&q), q.to_vec());
    }
}
