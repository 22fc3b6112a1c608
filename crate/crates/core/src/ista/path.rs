//! Regularization path for a diagonal operator with a closed-form
//! minimum-penalty solution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::shrink::MultiPenalty;

use super::operator::Diagonal;
use super::solver::{iterate, StopRule};

/// Parameter choice `alpha(eps) = eps^q`. Admissible for `0 < q < 2`, which
/// gives `alpha -> 0` and `eps^2 / alpha -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRule {
    pub exponent: f64,
}

impl AlphaRule {
    pub fn linear() -> Self {
        Self { exponent: 1.0 }
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent < 2.0) {
            return Err(Error::Domain(format!("alpha exponent {exponent} outside (0, 2)")));
        }
        Ok(Self { exponent })
    }

    pub fn alpha(&self, eps: f64) -> f64 {
        eps.powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub eps: f64,
    pub alpha: f64,
    /// `||f_hat - f_dagger||`.
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub f_dagger: Vec<f64>,
    pub points: Vec<PathPoint>,
}

/// Minimum-penalty solution of `K f = K f_true` for a diagonal `K` and a
/// penalty with nonnegative terms: `f_true` where `k != 0`, zero elsewhere.
pub fn f_dagger_diagonal(f_true: &[f64], k: &Diagonal) -> Vec<f64> {
    f_true.iter().zip(&k.k).map(|(&f, &kk)| if kk != 0.0 { f } else { 0.0 }).collect()
}

fn check_unique(k: &Diagonal, pen: &MultiPenalty) -> Result<()> {
    let injective = k.k.iter().all(|&v| v != 0.0);
    for j in 0..k.k.len() {
        if k.k[j] == 0.0 && !pen.coord_terms(j).iter().any(|&(_, p)| p > 1.0) {
            return Err(Error::NonUnique { coord: j });
        }
    }
    if !injective && pen.terms().is_empty() {
        return Err(Error::NonUnique { coord: 0 });
    }
    Ok(())
}

/// Solves `||K f - g_eps||^2 + alpha(eps) pen(f)` for data `g_eps = K f_true + e`
/// with `||e|| = eps`, for every noise level, and reports the distance to the
/// minimum-penalty solution.
pub fn regularization_path(
    f_true: &[f64],
    k: &Diagonal,
    pen: &MultiPenalty,
    eps_levels: &[f64],
    rule: AlphaRule,
    stop: &StopRule,
    seed: u64,
) -> Result<PathReport> {
    if f_true.len() != k.k.len() {
        return Err(Error::Shape(format!("{} coefficients for a {}-dim operator", f_true.len(), k.k.len())));
    }
    check_unique(k, pen)?;
    let f_dagger = f_dagger_diagonal(f_true, k);
    let clean: Vec<f64> = f_true.iter().zip(&k.k).map(|(f, kk)| f * kk).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: Vec<f64> = (0..clean.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut points = Vec::with_capacity(eps_levels.len());
    for &eps in eps_levels {
        if !(eps >= 0.0) {
            return Err(Error::Domain(format!("noise level {eps} is negative")));
        }
        let g: Vec<f64> = clean.iter().zip(&dir).map(|(c, d)| c + eps * d / dn).collect();
        let alpha = rule.alpha(eps);
        let scaled = pen.with_lambdas(&pen.terms().iter().map(|t| t.lambda * alpha).collect::<Vec<_>>())?;
        let state = iterate(&vec![0.0; clean.len()], &g, k, &scaled, stop)?;
        let error = state.f.iter().zip(&f_dagger).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        points.push(PathPoint {
            eps,
            alpha,
            error,
            iterations: state.iterations,
            converged: state.converged,
        });
    }
    Ok(PathReport { f_dagger, points })
}
