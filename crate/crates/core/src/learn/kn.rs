//! The per-coordinate surrogate objective `K_n` and the pair data shared by the learners.

use crate::error::{Error, Result};
use crate::problem::GridSpec;
use crate::stepreg::{candidate_x, data_bin};

/// One training pair at one coordinate, with its candidate layout precomputed.
#[derive(Debug, Clone)]
pub(crate) struct PairData {
    pub f: f64,
    pub g: f64,
    /// 0-based bin of `g`.
    pub home: usize,
    /// 0-based bin of `f`.
    pub target: usize,
    /// `(f - g)^2`.
    pub gap: f64,
    /// Candidate point per bin.
    pub x: Vec<f64>,
    /// `(x_t - g)^2` per bin.
    pub q: Vec<f64>,
}

impl PairData {
    pub fn new(f: f64, g: f64, grid: &GridSpec) -> Self {
        let home = data_bin(g, grid).expect("validated slice");
        let x: Vec<f64> = (0..grid.bins())
            .map(|pos| candidate_x(g, pos, Some(home), grid))
            .collect();
        let q = x.iter().map(|&v| (v - g) * (v - g)).collect();
        Self {
            f,
            g,
            home,
            target: grid.bin_unchecked(f),
            gap: (f - g) * (f - g),
            x,
            q,
        }
    }

    /// Squared distance from `f` to the candidate point of bin `pos`.
    pub fn cost(&self, pos: usize) -> f64 {
        (self.f - self.x[pos]) * (self.f - self.x[pos])
    }
}

pub(crate) fn slice_data(slice: &[(f64, f64)], grid: &GridSpec) -> Result<Vec<PairData>> {
    for (i, &(f, g)) in slice.iter().enumerate() {
        for v in [f, g] {
            if !grid.contains(v) {
                return Err(Error::OutOfGrid {
                    coord: i,
                    value: v,
                    m1: grid.m1(),
                    m2: grid.m2(),
                });
            }
        }
    }
    Ok(slice.iter().map(|&(f, g)| PairData::new(f, g, grid)).collect())
}

/// `K(x) = sum_i | min_t (q_i(t) + x_t) - (f_i - g_i)^2 - x_{bin(f_i)} |^2` for one coordinate.
#[derive(Debug, Clone)]
pub struct KnObjective {
    bins: usize,
    pairs: Vec<PairData>,
}

/// Builds `K_n` for one coordinate from its `(f_i, g_i)` values.
pub fn build_kn(slice: &[(f64, f64)], grid: &GridSpec) -> Result<KnObjective> {
    Ok(KnObjective {
        bins: grid.bins(),
        pairs: slice_data(slice, grid)?,
    })
}

impl KnObjective {
    pub(crate) fn from_pairs(bins: usize, pairs: Vec<PairData>) -> Self {
        Self { bins, pairs }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| {
                let r = residual(p, x).0;
                r * r
            })
            .sum()
    }

    /// Writes a subgradient into `grad` and returns the value.
    pub fn subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        for p in &self.pairs {
            let (r, arg) = residual(p, x);
            total += r * r;
            grad[arg] += 2.0 * r;
            grad[p.target] -= 2.0 * r;
        }
        total
    }
}

/// Inner residual and the bin attaining the inner minimum.
fn residual(p: &PairData, x: &[f64]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (t, (&q, &xt)) in p.q.iter().zip(x).enumerate() {
        let v = q + xt;
        if v < best.0 {
            best = (v, t);
        }
    }
    (best.0 - p.gap - x[p.target], best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_pair_gives_zero() {
        let grid = GridSpec::with_default_eps(0, 2, 2).unwrap();
        let k = build_kn(&[(0.7, 0.7)], &grid).unwrap();
        assert_eq!(k.value(&[0.0; 8]), 0.0);
    }

    #[test]
    fn shift_invariance() {
        let grid = GridSpec::with_default_eps(0, 2, 1).unwrap();
        let k = build_kn(&[(0.3, 1.6), (1.9, 0.2)], &grid).unwrap();
        let x = [0.4, -0.2, 0.9, 0.1];
        let y: Vec<f64> = x.iter().map(|v| v + 3.5).collect();
        assert!((k.value(&x) - k.value(&y)).abs() < 1e-12);
    }

    #[test]
    fn worked_example_minimum() {
        let grid = GridSpec::with_default_eps(0, 1, 1).unwrap();
        let k = build_kn(&[(0.25, 0.75)], &grid).unwrap();
        assert!((k.value(&[0.0, 0.0625]) - 0.1875f64.powi(2)).abs() < 1e-15);
        assert!((k.value(&[0.0, 0.0]) - 0.25f64.powi(2)).abs() < 1e-15);
    }
}
