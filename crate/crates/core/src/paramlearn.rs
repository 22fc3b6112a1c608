//! Learning the weights `lambda` of a multi-penalty from training pairs.
//!
//! For the identity operator the denoised coefficient is `F_lambda^{-1}(g)` with
//! `F_lambda(x) = x + sign(x) sum_j p_j lambda_j w_j |x|^{p_j - 1} / 2`, so the
//! training error is an explicit function of `lambda`. Its gradient follows from
//! implicit differentiation of `F_lambda(x) = y`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{ensure_consistent, TrainingSet};
use crate::shrink::{shrink_multi_unchecked, MultiPenalty};

/// Shrunk values below this magnitude count as sitting on the `p = 1` kink.
pub const KINK_TOL: f64 = 1e-9;

/// `F_lambda(x)` with `terms = [(lambda_j * w_j, p_j)]`; needs every `p_j > 1`.
pub fn f_lambda(x: f64, terms: &[(f64, f64)]) -> Result<f64> {
    if let Some(&(_, p)) = terms.iter().find(|t| t.1 <= 1.0) {
        return Err(Error::Domain(format!(
            "F_lambda is evaluated only for exponents above 1, got {p}; use invert_f_lambda"
        )));
    }
    Ok(x + 0.5 * x.signum() * terms.iter().map(|&(c, p)| p * c * x.abs().powf(p - 1.0)).sum::<f64>())
}

/// `F_lambda^{-1}(y)`, i.e. the minimizer of `(x - y)^2 + sum_j c_j |x|^{p_j}`.
/// Terms with `c_j = 0` are ignored; `p_j = 1` terms are allowed.
pub fn invert_f_lambda(y: f64, terms: &[(f64, f64)]) -> f64 {
    let active: Vec<(f64, f64)> = terms.iter().copied().filter(|t| t.0 > 0.0).collect();
    shrink_multi_unchecked(y, &active)
}

fn coord_terms(lambdas: &[f64], pen: &MultiPenalty, j: usize) -> Vec<(usize, f64, f64)> {
    pen.applicable_terms(j)
        .into_iter()
        .map(|(k, w, p)| (k, lambdas[k] * w, p))
        .collect()
}

fn check_shapes(lambdas: &[f64], ts: &TrainingSet, pen: &MultiPenalty) -> Result<()> {
    ensure_consistent(ts)?;
    if lambdas.len() != pen.terms().len() {
        return Err(Error::Shape(format!(
            "{} lambdas for {} terms",
            lambdas.len(),
            pen.terms().len()
        )));
    }
    if pen.dim() != ts.dim() {
        return Err(Error::Shape(format!(
            "penalty covers {} coordinates, data has {}",
            pen.dim(),
            ts.dim()
        )));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::Domain("lambdas must be non-negative".into()));
    }
    Ok(())
}

/// `sum_i sum_gamma (F_lambda^{-1}(g_i) - f_i)^2`, using the weights and exponents
/// of `pen` (its own lambdas are ignored).
pub fn objective_i_lambda(lambdas: &[f64], ts: &TrainingSet, pen: &MultiPenalty) -> Result<f64> {
    Ok(value_and_gradient(lambdas, ts, pen, false)?.0)
}

/// Objective and its gradient in `lambda`. Also returns how many shrunk values
/// sit on a `p = 1` kink, where the objective is not differentiable.
pub fn gradient_i_lambda(lambdas: &[f64], ts: &TrainingSet, pen: &MultiPenalty) -> Result<(f64, Vec<f64>, usize)> {
    value_and_gradient(lambdas, ts, pen, true)
}

fn value_and_gradient(
    lambdas: &[f64],
    ts: &TrainingSet,
    pen: &MultiPenalty,
    with_grad: bool,
) -> Result<(f64, Vec<f64>, usize)> {
    check_shapes(lambdas, ts, pen)?;
    let n = lambdas.len();
    let (value, grad, kinks) = (0..ts.dim())
        .into_par_iter()
        .map(|j| {
            let terms = coord_terms(lambdas, pen, j);
            let plain: Vec<(f64, f64)> = terms.iter().map(|&(_, c, p)| (c, p)).collect();
            let mut v = 0.0;
            let mut g = vec![0.0; if with_grad { n } else { 0 }];
            let mut kinks = 0usize;
            for (f, y) in ts.pairs() {
                let (fj, yj) = (f.values()[j], y.values()[j]);
                let x = invert_f_lambda(yj, &plain);
                let r = x - fj;
                v += r * r;
                if !with_grad {
                    continue;
                }
                let has_l1 = terms.iter().any(|t| t.2 == 1.0);
                if has_l1 && x.abs() < KINK_TOL && yj != 0.0 {
                    kinks += 1;
                }
                if x == 0.0 {
                    continue;
                }
                let ax = x.abs();
                let dfdx = 1.0
                    + 0.5
                        * terms
                            .iter()
                            .map(|&(_, c, p)| p * (p - 1.0) * c * ax.powf(p - 2.0))
                            .sum::<f64>();
                for &(k, _, p) in &terms {
                    let w = pen.terms()[k].weights[j];
                    let dfdl = 0.5 * x.signum() * p * w * ax.powf(p - 1.0);
                    g[k] += 2.0 * r * (-dfdl / dfdx);
                }
            }
            (v, g, kinks)
        })
        .reduce(
            || (0.0, vec![0.0; if with_grad { n } else { 0 }], 0),
            |a, b| {
                (
                    a.0 + b.0,
                    a.1.iter().zip(&b.1).map(|(x, y)| x + y).collect(),
                    a.2 + b.2,
                )
            },
        );
    Ok((value, grad, kinks))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaConfig {
    pub max_iters: usize,
    /// Stop once a step moves lambda by less than this (relative to `1 + |lambda|`).
    pub step_tol: f64,
    /// Line-search halvings allowed before giving up on an iteration.
    pub max_halvings: usize,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            step_tol: 1e-13,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaOutcome {
    pub lambdas: Vec<f64>,
    pub objective: f64,
    /// Objective after every accepted step, starting with the value at `lambda = 0`.
    pub trajectory: Vec<f64>,
    pub converged: bool,
    /// The line search failed to find a decrease before convergence.
    pub stalled: bool,
}

/// Projected gradient descent on [`objective_i_lambda`] over `lambda >= 0`,
/// started at zero with Armijo backtracking.
pub fn learn_lambdas(ts: &TrainingSet, pen: &MultiPenalty, cfg: &LambdaConfig) -> Result<LambdaOutcome> {
    let n = pen.terms().len();
    if n == 0 {
        return Err(Error::Domain("no penalty terms to learn".into()));
    }
    let mut lam = vec![0.0; n];
    let (mut val, mut grad, _) = gradient_i_lambda(&lam, ts, pen)?;
    let mut trajectory = vec![val];
    let mut step = 1.0;
    let mut converged = false;
    let mut stalled = false;
    for _ in 0..cfg.max_iters {
        let mut accepted = None;
        let mut alpha = step;
        for _ in 0..cfg.max_halvings {
            let cand: Vec<f64> = lam.iter().zip(&grad).map(|(l, g)| (l - alpha * g).max(0.0)).collect();
            let decrease: f64 = grad.iter().zip(lam.iter().zip(&cand)).map(|(g, (a, b))| g * (a - b)).sum();
            if decrease <= 0.0 {
                break;
            }
            let v = objective_i_lambda(&cand, ts, pen)?;
            if v <= val - 1e-4 * decrease {
                accepted = Some((cand, v, alpha));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, v, alpha)) = accepted else {
            // no descent direction left (projected gradient vanishes) or the search failed
            let pg: f64 = lam
                .iter()
                .zip(&grad)
                .map(|(l, g)| (l - (l - g).max(0.0)).abs())
                .fold(0.0, f64::max);
            converged = pg <= 1e-10 * (1.0 + val.abs());
            stalled = !converged;
            break;
        };
        let moved = lam
            .iter()
            .zip(&cand)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        lam = cand;
        val = v;
        trajectory.push(val);
        step = (alpha * 2.0).min(1e6);
        if moved <= cfg.step_tol {
            converged = true;
            break;
        }
        let (_, g, _) = gradient_i_lambda(&lam, ts, pen)?;
        grad = g;
    }
    Ok(LambdaOutcome {
        lambdas: lam,
        objective: val,
        trajectory,
        converged,
        stalled,
    })
}

/// Least-squares solution of the interpolation system `F_lambda(f_i) = g_i`
/// (linear in `lambda`) and its residual norm. Diagnostic only: the system is
/// solvable only in special cases.
pub fn lambda_system_residual(ts: &TrainingSet, pen: &MultiPenalty) -> Result<(Vec<f64>, f64)> {
    ensure_consistent(ts)?;
    let n = pen.terms().len();
    let rows = ts.len() * ts.dim();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut rhs = DVector::<f64>::zeros(rows);
    let mut row = 0;
    for (f, g) in ts.pairs() {
        for j in 0..ts.dim() {
            let x = f.values()[j];
            for (k, w, p) in pen.applicable_terms(j) {
                a[(row, k)] = 0.5 * x.signum() * p * w * x.abs().powf(p - 1.0);
            }
            rhs[row] = g.values()[j] - x;
            row += 1;
        }
    }
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
    let resid = (&a * &sol - &rhs).norm();
    Ok((sol.iter().copied().collect(), resid))
}
