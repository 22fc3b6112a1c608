//! Thresholded Landweber iteration `f <- S(f + K*(g - K f))`.

use crate::error::{Error, Result};
use crate::shrink::{shrink_multi_unchecked, MultiPenalty};

use super::operator::{gate_norm, LinearOperator};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn check<K: LinearOperator + ?Sized>(f: &[f64], g: &[f64], k: &K, pen: &MultiPenalty) -> Result<()> {
    if f.len() != k.dim_in() || g.len() != k.dim_out() {
        return Err(Error::Shape(format!(
            "operator maps {} -> {}, got iterate {} and data {}",
            k.dim_in(),
            k.dim_out(),
            f.len(),
            g.len()
        )));
    }
    if !pen.terms().is_empty() && pen.dim() != f.len() {
        return Err(Error::Shape(format!("penalty covers {} coordinates, iterate has {}", pen.dim(), f.len())));
    }
    Ok(())
}

fn gate<K: LinearOperator + ?Sized>(k: &K) -> Result<()> {
    let norm = gate_norm(k);
    if norm >= 1.0 {
        return Err(Error::NormGate { norm });
    }
    Ok(())
}

fn shrink_all(b: &[f64], pen: &MultiPenalty) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(j, &v)| {
            if pen.terms().is_empty() {
                v
            } else {
                shrink_multi_unchecked(v, &pen.coord_terms(j))
            }
        })
        .collect()
}

fn step<K: LinearOperator + ?Sized>(f: &[f64], g: &[f64], k: &K, pen: &MultiPenalty) -> Vec<f64> {
    let resid: Vec<f64> = g.iter().zip(k.apply(f)).map(|(a, b)| a - b).collect();
    let b: Vec<f64> = f.iter().zip(k.adjoint(&resid)).map(|(a, c)| a + c).collect();
    shrink_all(&b, pen)
}

/// One thresholded Landweber step. Refuses operators with norm `>= 1`.
pub fn apply_t<K: LinearOperator + ?Sized>(f: &[f64], g: &[f64], k: &K, pen: &MultiPenalty) -> Result<Vec<f64>> {
    check(f, g, k, pen)?;
    gate(k)?;
    Ok(step(f, g, k, pen))
}

/// `||Kf - g||^2 + pen(f)`.
pub fn objective<K: LinearOperator + ?Sized>(f: &[f64], g: &[f64], k: &K, pen: &MultiPenalty) -> f64 {
    let kf = k.apply(f);
    kf.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + pen.value(f)
}

/// `||Kf - g||^2 + pen(f) + ||f - a||^2 - ||K(f - a)||^2`.
pub fn surrogate_value<K: LinearOperator + ?Sized>(f: &[f64], a: &[f64], g: &[f64], k: &K, pen: &MultiPenalty) -> f64 {
    let d: Vec<f64> = f.iter().zip(a).map(|(x, y)| x - y).collect();
    objective(f, g, k, pen) + sq_norm(&d) - sq_norm(&k.apply(&d))
}

/// Bound on `||f^n||^2` implied by `Phi(f^n) <= Phi(f^0)`:
/// every coordinate governed by a term with smallest coefficient `c` and exponent
/// `p <= 2` satisfies `sum |f_j|^2 <= (Phi / c)^{2/p}`. Infinite if some
/// coordinate carries no positive penalty.
pub fn iterate_bound(pen: &MultiPenalty, phi0: f64) -> f64 {
    let dim = pen.dim();
    if pen.terms().is_empty() || dim == 0 {
        return f64::INFINITY;
    }
    match pen.partition() {
        Some(part) => {
            let mut total = 0.0;
            for (k, t) in pen.terms().iter().enumerate() {
                let members: Vec<usize> = (0..dim).filter(|&j| part[j] == k).collect();
                if members.is_empty() {
                    continue;
                }
                let c = members.iter().map(|&j| t.lambda * t.weights[j]).fold(f64::INFINITY, f64::min);
                if c <= 0.0 {
                    return f64::INFINITY;
                }
                total += (phi0 / c).powf(2.0 / t.p);
            }
            total
        }
        None => pen
            .terms()
            .iter()
            .filter_map(|t| {
                let c = t.weights.iter().map(|w| t.lambda * w).fold(f64::INFINITY, f64::min);
                (c > 0.0).then(|| (phi0 / c).powf(2.0 / t.p))
            })
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    pub step_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            step_tol: 1e-10,
        }
    }
}

/// Monitor values after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `||f^{n+1} - f^n||`.
    pub step_norm: f64,
    /// `Phi(f^{n+1})`.
    pub objective: f64,
    /// Surrogate at `f^{n+1}` around `a = f^n`.
    pub surrogate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub f: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    /// `Phi(f^0)`.
    pub initial_objective: f64,
    /// Bound on `||f^n||^2` from [`iterate_bound`].
    pub bound: f64,
}

/// Slack allowed in the objective monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Iterates the thresholded Landweber map until the step norm drops below
/// `stop.step_tol` or `stop.max_iters` steps were taken. Checks after every
/// step that the objective did not increase and the iterate obeys the norm bound.
pub fn iterate<K: LinearOperator + ?Sized>(
    f0: &[f64],
    g: &[f64],
    k: &K,
    pen: &MultiPenalty,
    stop: &StopRule,
) -> Result<IterationState> {
    check(f0, g, k, pen)?;
    gate(k)?;
    let phi0 = objective(f0, g, k, pen);
    let bound = iterate_bound(pen, phi0);
    let mut f = f0.to_vec();
    let mut prev = phi0;
    let mut history = Vec::new();
    let mut converged = false;
    for n in 0..stop.max_iters {
        let next = step(&f, g, k, pen);
        let step_norm = dist(&next, &f);
        let obj = objective(&next, g, k, pen);
        let sur = surrogate_value(&next, &f, g, k, pen);
        if obj > prev + MONOTONE_SLACK * prev.abs().max(1.0) {
            return Err(Error::Monotonicity {
                iter: n + 1,
                before: prev,
                after: obj,
            });
        }
        if sq_norm(&next) > bound * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::Internal(format!(
                "iterate norm^2 {} exceeds the a-priori bound {bound}",
                sq_norm(&next)
            )));
        }
        history.push(IterationRecord {
            iter: n + 1,
            step_norm,
            objective: obj,
            surrogate: sur,
        });
        f = next;
        prev = obj;
        if step_norm <= stop.step_tol {
            converged = true;
            break;
        }
    }
    Ok(IterationState {
        iterations: history.len(),
        f,
        converged,
        history,
        initial_objective: phi0,
        bound,
    })
}
