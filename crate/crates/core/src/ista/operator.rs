//! Forward operators for the iterative solver.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Bounded linear map between coefficient space and observation space.
pub trait LinearOperator: Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn adjoint(&self, y: &[f64]) -> Vec<f64>;
    /// An exact norm when the operator knows it.
    fn known_norm(&self) -> Option<f64> {
        None
    }
}

/// Diagonal operator `(Kx)_j = k_j x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal {
    pub k: Vec<f64>,
}

impl Diagonal {
    pub fn new(k: Vec<f64>) -> Self {
        Self { k }
    }
}

impl LinearOperator for Diagonal {
    fn dim_in(&self) -> usize {
        self.k.len()
    }
    fn dim_out(&self) -> usize {
        self.k.len()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.k).map(|(a, b)| a * b).collect()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }
    fn known_norm(&self) -> Option<f64> {
        Some(self.k.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// Dense matrix operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub m: DMatrix<f64>,
}

impl Dense {
    /// Row-major `rows x cols` entries.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self {
            m: DMatrix::from_row_slice(rows, cols, data),
        })
    }
}

impl LinearOperator for Dense {
    fn dim_in(&self) -> usize {
        self.m.ncols()
    }
    fn dim_out(&self) -> usize {
        self.m.nrows()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(x)).iter().copied().collect()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (self.m.transpose() * DVector::from_column_slice(y)).iter().copied().collect()
    }
}

/// `K / s`.
pub struct Scaled<'a, K: LinearOperator + ?Sized> {
    pub inner: &'a K,
    pub s: f64,
}

impl<K: LinearOperator + ?Sized> LinearOperator for Scaled<'_, K> {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.inner.dim_out()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.inner.apply(x).into_iter().map(|v| v / self.s).collect()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.inner.adjoint(y).into_iter().map(|v| v / self.s).collect()
    }
    fn known_norm(&self) -> Option<f64> {
        self.inner.known_norm().map(|n| n / self.s.abs())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Power-iteration estimate of `||K||` (100 steps, relative tolerance `1e-6`).
pub fn norm_estimate<K: LinearOperator + ?Sized>(k: &K) -> f64 {
    let n = k.dim_in();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.5).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut est = 0.0;
    for _ in 0..100 {
        let kv = k.apply(&v);
        let s = norm(&kv);
        if s == 0.0 {
            return 0.0;
        }
        let w = k.adjoint(&kv);
        let nw = norm(&w);
        if nw == 0.0 {
            return s;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        let prev = est;
        est = s;
        if (est - prev).abs() <= 1e-6 * est {
            break;
        }
    }
    norm(&k.apply(&v)).max(est)
}

/// Norm used by the gate: the known norm when available, otherwise the estimate.
pub fn gate_norm<K: LinearOperator + ?Sized>(k: &K) -> f64 {
    k.known_norm().unwrap_or_else(|| norm_estimate(k))
}

/// Largest `|<Ku, v> - <u, K*v>|` relative to `||u|| ||v|| max(1, ||K||)` over random pairs.
pub fn adjoint_mismatch<K: LinearOperator + ?Sized>(k: &K, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = gate_norm(k).max(1.0);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u: Vec<f64> = (0..k.dim_in()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let v: Vec<f64> = (0..k.dim_out()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let lhs: f64 = k.apply(&u).iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = u.iter().zip(k.adjoint(&v)).map(|(a, b)| a * b).sum();
        let denom = norm(&u) * norm(&v) * scale;
        if denom > 0.0 {
            worst = worst.max((lhs - rhs).abs() / denom);
        }
    }
    worst
}

/// `(K / s, g / s, s)` with `s = 1.05 ||K||`, making any rescaling explicit.
/// Penalties are not rescaled: the returned pair defines a different problem
/// unless the caller scales them too.
pub fn scaled_problem<'a, K: LinearOperator + ?Sized>(k: &'a K, g: &[f64]) -> (Scaled<'a, K>, Vec<f64>, f64) {
    let s = (1.05 * gate_norm(k)).max(f64::MIN_POSITIVE);
    (Scaled { inner: k, s }, g.iter().map(|v| v / s).collect(), s)
}
