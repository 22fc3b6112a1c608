//! Direct minimization of `K_n` under the quasiconvexity constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::GridSpec;
use crate::stepreg::coordinate_objective;

use super::constraints::project_unimodal;
use super::feasibility::{anchor, find_feasible, DiffSystem, FeasibilityConfig};
use super::kn::{KnObjective, PairData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectConfig {
    /// Random starts in addition to the zero start.
    pub restarts: usize,
    /// Subgradient steps per penalty round.
    pub iters_per_round: usize,
    /// Penalty rounds; the penalty weight doubles each round.
    pub penalty_rounds: usize,
    pub initial_penalty: f64,
    pub seed: u64,
    pub feasibility: FeasibilityConfig,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            iters_per_round: 300,
            penalty_rounds: 5,
            initial_penalty: 1.0,
            seed: 0,
            feasibility: FeasibilityConfig::default(),
        }
    }
}

pub(crate) struct DirectResult {
    pub x: Vec<f64>,
    pub kn: f64,
    pub objective: f64,
}

/// Exterior penalty `sum_s max(0, x_s - max(min_{r<s} x_r, min_{t>s} x_t))^2` and its subgradient.
fn quasi_penalty(x: &[f64], grad: &mut [f64], weight: f64) -> f64 {
    let b = x.len();
    if b < 3 {
        return 0.0;
    }
    let mut suffix = vec![(f64::INFINITY, b); b];
    for s in (0..b - 1).rev() {
        suffix[s] = if x[s + 1] < suffix[s + 1].0 { (x[s + 1], s + 1) } else { suffix[s + 1] };
    }
    let mut prefix = (x[0], 0);
    let mut total = 0.0;
    for s in 1..b - 1 {
        let (bound, at) = if prefix.0 >= suffix[s].0 { prefix } else { suffix[s] };
        let v = x[s] - bound;
        if v > 0.0 {
            total += v * v;
            grad[s] += 2.0 * weight * v;
            grad[at] -= 2.0 * weight * v;
        }
        if x[s] < prefix.0 {
            prefix = (x[s], s);
        }
    }
    weight * total
}

fn descend(kn: &KnObjective, x0: Vec<f64>, cfg: &DirectConfig, step0: f64) -> (f64, Vec<f64>) {
    let b = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; b];
    let mut best_proj = project_unimodal(&x);
    let mut best = (kn.value(&best_proj), best_proj.clone());
    let mut k = 0usize;
    for round in 0..cfg.penalty_rounds {
        let mu = cfg.initial_penalty * (round as f64).exp2();
        for _ in 0..cfg.iters_per_round {
            kn.subgradient(&x, &mut grad);
            quasi_penalty(&x, &mut grad, mu);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = step0 / ((k + 1) as f64).sqrt();
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= step * gi / norm;
            }
            k += 1;
            if k.is_multiple_of(10) {
                best_proj = project_unimodal(&x);
                let v = kn.value(&best_proj);
                if v < best.0 {
                    best = (v, best_proj.clone());
                }
            }
        }
    }
    best_proj = project_unimodal(&x);
    let v = kn.value(&best_proj);
    if v < best.0 {
        best = (v, best_proj);
    }
    best
}

/// Re-targets near-tied argmins toward the bin whose candidate is closest to the
/// clean value and solves the resulting assignment starting from `x`.
fn polish(pairs: &[PairData], x: &[f64], tol: f64, cfg: &FeasibilityConfig) -> Option<Vec<f64>> {
    let b = x.len();
    let assign: Vec<usize> = pairs
        .iter()
        .map(|p| {
            let vals: Vec<f64> = p.q.iter().zip(x).map(|(q, v)| q + v).collect();
            let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
            (0..b)
                .filter(|&t| vals[t] <= m + tol)
                .min_by(|&s, &t| p.cost(s).total_cmp(&p.cost(t)).then(s.cmp(&t)))
                .unwrap()
        })
        .collect();
    let sys = DiffSystem::new(pairs, &assign, b, cfg);
    let lowest = (0..b).min_by(|&s, &t| x[s].total_cmp(&x[t])).unwrap_or(0);
    let order = std::iter::once(lowest).chain(0..b);
    find_feasible(&sys, b, x, order).map(|(mut y, _)| {
        anchor(&mut y);
        y
    })
}

pub(crate) fn direct_coordinate(
    pairs: &[PairData],
    grid: &GridSpec,
    cfg: &DirectConfig,
    coord: usize,
) -> DirectResult {
    let b = grid.bins();
    let slice: Vec<(f64, f64)> = pairs.iter().map(|p| (p.f, p.g)).collect();
    let kn = KnObjective::from_pairs(b, pairs.to_vec());
    let scale = pairs
        .iter()
        .flat_map(|p| p.q.iter().copied())
        .fold(0.0, f64::max)
        .max(grid.width() * grid.width());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(coord as u64);

    let mut starts = vec![vec![0.0; b]];
    for _ in 0..cfg.restarts {
        starts.push((0..b).map(|_| rng.random::<f64>() * scale).collect());
    }
    let mut candidates: Vec<Vec<f64>> = vec![vec![0.0; b]];
    for s in starts {
        let (_, mut x) = descend(&kn, s, cfg, 0.5 * scale);
        anchor(&mut x);
        for tol in [1e-9, 1e-6, 1e-3] {
            if let Some(y) = polish(pairs, &x, tol * scale.max(1e-12), &cfg.feasibility) {
                candidates.push(y);
            }
        }
        candidates.push(x);
    }
    let mut best: Option<DirectResult> = None;
    for x in candidates {
        let objective = coordinate_objective(&x, &slice, grid);
        let kv = kn.value(&x);
        let better = match &best {
            None => true,
            Some(b) => objective < b.objective - 1e-15 || (objective <= b.objective + 1e-15 && kv < b.kn),
        };
        if better {
            best = Some(DirectResult { x, kn: kv, objective });
        }
    }
    best.unwrap()
}
