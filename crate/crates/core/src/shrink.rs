//! Scalar shrinkage operators for `x^2 - 2bx + sum_i c_i |x|^{p_i}` and the
//! coordinate-wise denoisers built from them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::CoefficientVector;
use crate::stepreg::StepRegularizer;

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITERS: usize = 200;

/// A single `c |x|^p` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTerm {
    pub c: f64,
    pub p: f64,
}

impl PenaltyTerm {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        check_term(c, p)?;
        Ok(Self { c, p })
    }
}

fn check_term(c: f64, p: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("penalty coefficient {c} must be positive")));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::Domain(format!("exponent {p} outside [1, 2]")));
    }
    Ok(())
}

/// `F_{c,p}(t) = t + (cp/2) sign(t) |t|^{p-1}` for `p > 1`.
pub fn f_cp(t: f64, c: f64, p: f64) -> Result<f64> {
    if p <= 1.0 {
        return Err(Error::Domain(format!("F_(c,p) needs p > 1, got {p}")));
    }
    Ok(t + 0.5 * c * p * t.signum() * t.abs().powf(p - 1.0))
}

/// Minimizer of `x^2 - 2bx + c|x|^p`.
pub fn shrink_single(b: f64, c: f64, p: f64) -> f64 {
    debug_assert!(c > 0.0 && (1.0..=2.0).contains(&p));
    if p == 1.0 {
        if b > c / 2.0 {
            b - c / 2.0
        } else if b < -c / 2.0 {
            b + c / 2.0
        } else {
            0.0
        }
    } else {
        b.signum() * positive_root(b.abs(), 0.0, &[(c, p)])
    }
}

/// Minimizer of `x^2 - 2bx + sum_i c_i |x|^{p_i}` over `terms = [(c_i, p_i)]`.
pub fn shrink_multi(b: f64, terms: &[(f64, f64)]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::Domain("shrink_multi needs at least one term".into()));
    }
    for &(c, p) in terms {
        check_term(c, p)?;
    }
    Ok(shrink_multi_unchecked(b, terms))
}

/// As [`shrink_multi`] but without validation; an empty list returns `b`.
pub(crate) fn shrink_multi_unchecked(b: f64, terms: &[(f64, f64)]) -> f64 {
    let l1: f64 = terms.iter().filter(|t| t.1 == 1.0).map(|t| t.0).sum();
    if b.abs() <= l1 / 2.0 {
        return 0.0;
    }
    let smooth: Vec<(f64, f64)> = terms.iter().copied().filter(|t| t.1 > 1.0).collect();
    if smooth.is_empty() {
        return b.signum() * (b.abs() - l1 / 2.0);
    }
    b.signum() * positive_root(b.abs(), l1, &smooth)
}

/// Root on `(0, beta]` of `h(x) = x + (l1 + sum c p x^{p-1}) / 2 - beta`, which is
/// increasing and concave there. Assumes `beta > l1 / 2`.
fn positive_root(beta: f64, l1: f64, smooth: &[(f64, f64)]) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let h = |x: f64| {
        x + 0.5 * (l1 + smooth.iter().map(|&(c, p)| c * p * x.powf(p - 1.0)).sum::<f64>()) - beta
    };
    let dh = |x: f64| {
        1.0 + 0.5
            * smooth
                .iter()
                .map(|&(c, p)| c * p * (p - 1.0) * x.powf(p - 2.0))
                .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0_f64, beta);
    let mut x = beta;
    for _ in 0..ROOT_MAX_ITERS {
        let v = h(x);
        if v == 0.0 {
            return x;
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = dh(x);
        let mut next = x - v / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        // relative stopping keeps tiny roots accurate; ROOT_TOL is the absolute floor
        if step <= f64::EPSILON * x || hi - lo <= (4.0 * f64::EPSILON * hi).max(ROOT_TOL * 1e-300) {
            break;
        }
    }
    x
}

/// One term of a [`MultiPenalty`]: `lambda * sum_gamma w_gamma |f_gamma|^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTerm {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub p: f64,
}

/// Sum of weighted `l^p` penalties.
///
/// In summed mode every term applies to every coordinate. In partitioned mode
/// `partition[j]` names the single term that applies at coordinate `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPenalty {
    terms: Vec<WeightedTerm>,
    partition: Option<Vec<usize>>,
}

impl MultiPenalty {
    pub fn new(terms: Vec<WeightedTerm>, partition: Option<Vec<usize>>) -> Result<Self> {
        let dim = terms.first().map(|t| t.weights.len()).unwrap_or(0);
        for t in &terms {
            if !(t.lambda >= 0.0 && t.lambda.is_finite()) {
                return Err(Error::Domain(format!("lambda {} must be non-negative", t.lambda)));
            }
            if !(1.0..=2.0).contains(&t.p) {
                return Err(Error::Domain(format!("exponent {} outside [1, 2]", t.p)));
            }
            if t.weights.len() != dim {
                return Err(Error::Shape("weight sequences differ in length".into()));
            }
            if t.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                return Err(Error::Domain("weights must be positive".into()));
            }
        }
        if let Some(part) = &partition {
            if part.len() != dim {
                return Err(Error::Shape(format!(
                    "partition covers {} coordinates, weights have {dim}",
                    part.len()
                )));
            }
            if let Some(&bad) = part.iter().find(|&&k| k >= terms.len()) {
                return Err(Error::Domain(format!("partition names missing term {bad}")));
            }
        }
        Ok(Self { terms, partition })
    }

    /// Single term with uniform weight 1 on `dim` coordinates.
    pub fn uniform(lambda: f64, p: f64, dim: usize) -> Result<Self> {
        Self::new(
            vec![WeightedTerm {
                lambda,
                weights: vec![1.0; dim],
                p,
            }],
            None,
        )
    }

    /// Partitioned penalty with per-coordinate `(w_gamma, p_gamma)` and `lambda = 1`;
    /// coordinates sharing an exponent share one term.
    pub fn per_coordinate(weights: &[f64], exponents: &[f64]) -> Result<Self> {
        if weights.len() != exponents.len() {
            return Err(Error::Shape("weights and exponents differ in length".into()));
        }
        let mut ps: Vec<f64> = Vec::new();
        let mut part = Vec::with_capacity(weights.len());
        for &p in exponents {
            let k = match ps.iter().position(|&q| q == p) {
                Some(k) => k,
                None => {
                    ps.push(p);
                    ps.len() - 1
                }
            };
            part.push(k);
        }
        let terms = ps
            .iter()
            .map(|&p| WeightedTerm {
                lambda: 1.0,
                weights: weights.to_vec(),
                p,
            })
            .collect();
        Self::new(terms, Some(part))
    }

    pub fn terms(&self) -> &[WeightedTerm] {
        &self.terms
    }

    pub fn partition(&self) -> Option<&[usize]> {
        self.partition.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.terms.first().map(|t| t.weights.len()).unwrap_or(0)
    }

    /// Copy with new lambda values.
    pub fn with_lambdas(&self, lambdas: &[f64]) -> Result<Self> {
        if lambdas.len() != self.terms.len() {
            return Err(Error::Shape(format!(
                "{} lambdas for {} terms",
                lambdas.len(),
                self.terms.len()
            )));
        }
        let terms = self
            .terms
            .iter()
            .zip(lambdas)
            .map(|(t, &l)| WeightedTerm { lambda: l, ..t.clone() })
            .collect();
        Self::new(terms, self.partition.clone())
    }

    /// Active `(c, p)` pairs at coordinate `j`, with `c = lambda * w_j > 0`.
    pub fn coord_terms(&self, j: usize) -> Vec<(f64, f64)> {
        let pick = |t: &WeightedTerm| {
            let c = t.lambda * t.weights[j];
            (c > 0.0).then_some((c, t.p))
        };
        match &self.partition {
            Some(part) => pick(&self.terms[part[j]]).into_iter().collect(),
            None => self.terms.iter().filter_map(pick).collect(),
        }
    }

    /// `(term index, w_j, p)` for every term that applies at coordinate `j`,
    /// whatever its current lambda.
    pub fn applicable_terms(&self, j: usize) -> Vec<(usize, f64, f64)> {
        match &self.partition {
            Some(part) => {
                let k = part[j];
                vec![(k, self.terms[k].weights[j], self.terms[k].p)]
            }
            None => self
                .terms
                .iter()
                .enumerate()
                .map(|(k, t)| (k, t.weights[j], t.p))
                .collect(),
        }
    }

    /// Penalty value `sum_j sum_(c,p) c |f_j|^p`.
    pub fn value(&self, f: &[f64]) -> f64 {
        f.iter()
            .enumerate()
            .map(|(j, &x)| {
                self.coord_terms(j)
                    .iter()
                    .map(|&(c, p)| c * x.abs().powf(p))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Exact minimizer of `||f - g||^2 + pen(f)`, coordinate by coordinate.
pub fn denoise_identity(g: &CoefficientVector, pen: &MultiPenalty) -> Result<CoefficientVector> {
    if pen.dim() != g.len() && !pen.terms().is_empty() {
        return Err(Error::Shape(format!(
            "penalty has {} coordinates, signal has {}",
            pen.dim(),
            g.len()
        )));
    }
    let values = g
        .values()
        .par_iter()
        .enumerate()
        .map(|(j, &b)| {
            if pen.terms().is_empty() {
                b
            } else {
                shrink_multi_unchecked(b, &pen.coord_terms(j))
            }
        })
        .collect();
    g.with_values(values)
}

/// Regularizer accepted by [`denoise_diagonal`].
#[derive(Debug, Clone, Copy)]
pub enum Regularizer<'a> {
    Step(&'a StepRegularizer),
    Penalty(&'a MultiPenalty),
}

/// Per-coordinate minimizer of `|k_j x - g_j|^2 + psi_j(x)`.
pub fn denoise_diagonal(
    g: &CoefficientVector,
    k: &[f64],
    reg: Regularizer<'_>,
) -> Result<CoefficientVector> {
    if k.len() != g.len() {
        return Err(Error::Shape(format!("{} multipliers for {} coordinates", k.len(), g.len())));
    }
    let values: Result<Vec<f64>> = match reg {
        Regularizer::Penalty(pen) => g
            .values()
            .par_iter()
            .zip(k.par_iter())
            .enumerate()
            .map(|(j, (&gj, &kj))| {
                let terms = if pen.terms().is_empty() { Vec::new() } else { pen.coord_terms(j) };
                if kj == 0.0 {
                    return if terms.is_empty() {
                        Err(Error::NonUnique { coord: j })
                    } else {
                        Ok(0.0)
                    };
                }
                let scaled: Vec<(f64, f64)> =
                    terms.iter().map(|&(c, p)| (c / (kj * kj), p)).collect();
                Ok(shrink_multi_unchecked(gj / kj, &scaled))
            })
            .collect(),
        Regularizer::Step(reg) => {
            if reg.dim() != g.len() {
                return Err(Error::Shape(format!(
                    "regularizer has {} coordinates, signal has {}",
                    reg.dim(),
                    g.len()
                )));
            }
            g.values()
                .par_iter()
                .zip(k.par_iter())
                .enumerate()
                .map(|(j, (&gj, &kj))| {
                    if kj == 0.0 {
                        return Err(Error::NonUnique { coord: j });
                    }
                    Ok(crate::stepreg::argmin_scaled(gj / kj, kj * kj, reg.coeffs(j), reg.grid()).x)
                })
                .collect()
        }
    };
    g.with_values(values?)
}
