//! Cascade iteration `phi_n(x) = sum_k p_k phi_{n-1}(2x - k)` started from the unit box.

use super::filter::ScalingFilter;

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    /// Grid points `x_i = lo + i * 2^-iters`.
    pub x: Vec<f64>,
    /// `phi_iters(x_i)`.
    pub values: Vec<f64>,
    /// `max_i |phi_n(x_i) - phi_{n-1}(x_i)|` for `n = 1..=iters`.
    pub sup_diff: Vec<f64>,
    /// `(sum_i |phi_n - phi_{n-1}|^2 h)^{1/2}` for `n = 1..=iters`.
    pub l2_diff: Vec<f64>,
    /// Riemann sum of the final iterate.
    pub integral: f64,
}

/// Runs `iters` cascade steps on a fixed dyadic grid of spacing `2^-iters`
/// covering the filter's support.
///
/// Every iterate is piecewise constant on intervals of length at least the
/// grid spacing, so grid samples are exact.
pub fn cascade_phi(filter: &ScalingFilter, iters: u32) -> CascadeResult {
    let lo = filter.offsets().first().copied().unwrap_or(0).min(0);
    let hi = filter.offsets().last().copied().unwrap_or(1).max(1);
    let scale = 1usize << iters;
    let h = 1.0 / scale as f64;
    let npts = (hi - lo) as usize * scale;
    let x: Vec<f64> = (0..npts).map(|i| lo as f64 + i as f64 * h).collect();
    // box function on [0, 1)
    let mut cur: Vec<f64> = x.iter().map(|&v| if (0.0..1.0).contains(&v) { 1.0 } else { 0.0 }).collect();
    let mut sup_diff = Vec::with_capacity(iters as usize);
    let mut l2_diff = Vec::with_capacity(iters as usize);
    for _ in 0..iters {
        let mut next = vec![0.0; npts];
        for (i, out) in next.iter_mut().enumerate() {
            // 2 x_i - k = lo + (2i + (lo - k) * scale) h
            let mut acc = 0.0;
            for (k, p) in filter.iter() {
                let j = 2 * i as i64 + (lo - k) * scale as i64;
                if j >= 0 && (j as usize) < npts {
                    acc += p * cur[j as usize];
                }
            }
            *out = acc;
        }
        let mut sup = 0.0f64;
        let mut l2 = 0.0;
        for (a, b) in next.iter().zip(&cur) {
            let d = (a - b).abs();
            sup = sup.max(d);
            l2 += d * d * h;
        }
        sup_diff.push(sup);
        l2_diff.push(l2.sqrt());
        cur = next;
    }
    let integral = cur.iter().sum::<f64>() * h;
    CascadeResult {
        x,
        values: cur,
        sup_diff,
        l2_diff,
        integral,
    }
}
