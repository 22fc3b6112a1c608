//! Periodic orthonormal pyramid transform driven by a scaling filter.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::problem::CoefficientVector;

use super::filter::ScalingFilter;

/// Coefficients of a multi-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
    /// Coarsest approximation.
    pub approx: Vec<f64>,
}

impl Pyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn signal_len(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    /// Coarsest approximation, then details from coarsest to finest.
    pub fn flatten(&self) -> CoefficientVector {
        let mut v = self.approx.clone();
        for d in self.details.iter().rev() {
            v.extend_from_slice(d);
        }
        CoefficientVector::from_values(v)
    }

    /// Inverse of [`Pyramid::flatten`] for a signal of length `n`.
    pub fn from_flat(values: &[f64], levels: usize) -> Result<Self> {
        let n = values.len();
        check_levels(n, levels)?;
        let coarse = n >> levels;
        let approx = values[..coarse].to_vec();
        let mut details = Vec::with_capacity(levels);
        let mut at = coarse;
        for l in (1..=levels).rev() {
            let len = n >> l;
            details.push(values[at..at + len].to_vec());
            at += len;
        }
        details.reverse();
        Ok(Self { details, approx })
    }
}

fn check_levels(n: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Ok(());
    }
    if n == 0 || levels >= usize::BITS as usize || !n.is_multiple_of(1usize << levels) {
        return Err(Error::Shape(format!(
            "length {n} is not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

/// Samples at rate `2^j` used directly as level-`j` approximation coefficients.
pub fn project_samples(samples: &[f64]) -> Vec<f64> {
    samples.to_vec()
}

fn analysis_taps(filter: &ScalingFilter) -> (Vec<(i64, f64)>, Vec<(i64, f64)>) {
    let h = filter.iter().map(|(k, p)| (k, p * FRAC_1_SQRT_2)).collect();
    let g = filter.wavelet().into_iter().map(|(k, q)| (k, q * FRAC_1_SQRT_2)).collect();
    (h, g)
}

fn analyze(x: &[f64], h: &[(i64, f64)], g: &[(i64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as i64;
    let half = x.len() / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        let base = 2 * i as i64;
        a[i] = h.iter().map(|&(k, c)| c * x[(base + k).rem_euclid(n) as usize]).sum();
        d[i] = g.iter().map(|&(k, c)| c * x[(base + k).rem_euclid(n) as usize]).sum();
    }
    (a, d)
}

fn synthesize(a: &[f64], d: &[f64], h: &[(i64, f64)], g: &[(i64, f64)]) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for i in 0..a.len() {
        let base = 2 * i as i64;
        for &(k, c) in h {
            x[(base + k).rem_euclid(n as i64) as usize] += c * a[i];
        }
        for &(k, c) in g {
            x[(base + k).rem_euclid(n as i64) as usize] += c * d[i];
        }
    }
    x
}

/// `levels`-deep decomposition of `approx`.
pub fn decompose(approx: &[f64], filter: &ScalingFilter, levels: usize) -> Result<Pyramid> {
    check_levels(approx.len(), levels)?;
    let (h, g) = analysis_taps(filter);
    let mut cur = approx.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analyze(&cur, &h, &g);
        details.push(d);
        cur = a;
    }
    Ok(Pyramid { details, approx: cur })
}

/// Inverse of [`decompose`].
pub fn reconstruct(tree: &Pyramid, filter: &ScalingFilter) -> Result<Vec<f64>> {
    let (h, g) = analysis_taps(filter);
    let mut cur = tree.approx.clone();
    for d in tree.details.iter().rev() {
        if d.len() != cur.len() {
            return Err(Error::Shape(format!(
                "detail level of length {} paired with approximation of length {}",
                d.len(),
                cur.len()
            )));
        }
        cur = synthesize(&cur, d, &h, &g);
    }
    Ok(cur)
}
