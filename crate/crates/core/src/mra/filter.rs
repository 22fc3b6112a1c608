//! Scaling filters and the conditions making them generate an orthonormal basis.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Unit-circle samples used by [`check_qmf`].
pub const QMF_SAMPLES: usize = 4096;

/// Scaling coefficients `p_k` at integer offsets `k`, normalized so that
/// `sum_k p_k = 2` for a valid filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFilter {
    offsets: Vec<i64>,
    taps: Vec<f64>,
}

impl ScalingFilter {
    pub fn new(offsets: Vec<i64>, taps: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != taps.len() {
            return Err(Error::Shape(format!(
                "{} offsets for {} taps",
                offsets.len(),
                taps.len()
            )));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("filter offsets must be strictly increasing".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("filter taps must be finite".into()));
        }
        Ok(Self { offsets, taps })
    }

    /// Taps at offsets `0..taps.len()`.
    pub fn contiguous(taps: Vec<f64>) -> Result<Self> {
        Self::new((0..taps.len() as i64).collect(), taps)
    }

    pub fn haar() -> Self {
        Self::contiguous(vec![1.0, 1.0]).unwrap()
    }

    /// Four-tap Daubechies filter.
    pub fn db4() -> Self {
        let s = 3f64.sqrt();
        Self::contiguous(vec![(1.0 + s) / 4.0, (3.0 + s) / 4.0, (3.0 - s) / 4.0, (1.0 - s) / 4.0]).unwrap()
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// `(k, p_k)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.taps.iter().copied())
    }

    /// `P(e^{it}) = (1/2) sum_k p_k e^{ikt}` as `(re, im)`.
    pub fn symbol(&self, t: f64) -> (f64, f64) {
        self.iter().fold((0.0, 0.0), |(re, im), (k, p)| {
            let a = k as f64 * t;
            (re + 0.5 * p * a.cos(), im + 0.5 * p * a.sin())
        })
    }

    fn modulus_sq(&self, t: f64) -> f64 {
        let (re, im) = self.symbol(t);
        re * re + im * im
    }

    /// Wavelet taps `q_k = (-1)^k p_{1-k}`.
    pub fn wavelet(&self) -> Vec<(i64, f64)> {
        let mut q: Vec<(i64, f64)> = self
            .iter()
            .map(|(k, p)| {
                let j = 1 - k;
                (j, if j.rem_euclid(2) == 0 { p } else { -p })
            })
            .collect();
        q.sort_by_key(|e| e.0);
        q
    }
}

/// Which of the three orthonormality conditions failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmfCondition {
    /// `(1/2) sum p_k = 1`.
    Normalization,
    /// `|P(z)|^2 + |P(-z)|^2 = 1` on the unit circle.
    PowerComplementary,
    /// `|P(e^{it})| > 0` for `|t| <= pi/2`.
    NonVanishing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmfReport {
    /// `|(1/2) sum p_k - 1|`.
    pub normalization: f64,
    /// Largest `| |P(z)|^2 + |P(-z)|^2 - 1 |` over the samples.
    pub power_complementary: f64,
    /// Smallest `|P(e^{it})|` over `|t| <= pi/2`, refined around the sampled minimum.
    pub min_modulus: f64,
    pub violated: Vec<QmfCondition>,
}

impl QmfReport {
    pub fn ok(&self) -> bool {
        self.violated.is_empty()
    }
}

/// Threshold below which `|P|` counts as vanishing.
pub const VANISHING_TOL: f64 = 1e-6;

/// Evaluates the three conditions on [`QMF_SAMPLES`] unit-circle samples.
/// `tol` bounds the two equality conditions.
pub fn check_qmf(filter: &ScalingFilter, tol: f64) -> QmfReport {
    let normalization = (0.5 * filter.taps.iter().sum::<f64>() - 1.0).abs();
    let mut power = 0.0f64;
    for i in 0..QMF_SAMPLES {
        let t = 2.0 * PI * i as f64 / QMF_SAMPLES as f64;
        let v = filter.modulus_sq(t) + filter.modulus_sq(t + PI);
        power = power.max((v - 1.0).abs());
    }
    let half = QMF_SAMPLES / 4;
    let step = PI / (2 * half) as f64;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..=2 * half {
        let t = -PI / 2.0 + i as f64 * step;
        let v = filter.modulus_sq(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    // golden-section refinement around the best sample
    let (mut a, mut b) = ((best_t - step).max(-PI / 2.0), (best_t + step).min(PI / 2.0));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if filter.modulus_sq(c) < filter.modulus_sq(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let min_modulus = best.min(filter.modulus_sq(0.5 * (a + b))).max(0.0).sqrt();
    let mut violated = Vec::new();
    if normalization > tol {
        violated.push(QmfCondition::Normalization);
    }
    if power > tol {
        violated.push(QmfCondition::PowerComplementary);
    }
    if min_modulus <= VANISHING_TOL {
        violated.push(QmfCondition::NonVanishing);
    }
    QmfReport {
        normalization,
        power_complementary: power,
        min_modulus,
        violated,
    }
}

/// One-angle family of four-tap orthonormal filters.
///
/// `theta = pi/2` gives Haar, `theta = 0` a shifted Haar filter and
/// `theta = pi/3` the four-tap Daubechies filter. Normalization and power
/// complementarity hold for every angle; the non-vanishing condition fails
/// near `theta = pi`.
pub fn lattice_filter(theta: f64) -> ScalingFilter {
    let (s, c) = theta.sin_cos();
    ScalingFilter::contiguous(vec![
        (1.0 - c + s) / 2.0,
        (1.0 + c + s) / 2.0,
        (1.0 + c - s) / 2.0,
        (1.0 - c - s) / 2.0,
    ])
    .unwrap()
}

/// Finite set of candidate filters for joint learning.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSearchSpace {
    /// Lattice angles.
    Lattice(Vec<f64>),
    Explicit(Vec<ScalingFilter>),
}

impl FilterSearchSpace {
    /// `count` equally spaced lattice angles on `[0, 2 pi)`.
    pub fn lattice_uniform(count: usize) -> Self {
        Self::Lattice((0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect())
    }

    pub fn filters(&self) -> Vec<ScalingFilter> {
        match self {
            Self::Lattice(thetas) => thetas.iter().map(|&t| lattice_filter(t)).collect(),
            Self::Explicit(f) => f.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Lattice(t) => t.len(),
            Self::Explicit(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
