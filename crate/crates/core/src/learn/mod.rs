//! Learning step regularizers from a training set.
//!
//! Two routes are provided. [`learn_direct`] minimizes the surrogate `K_n` of
//! each coordinate under the quasiconvexity constraints. [`learn_discrete`]
//! searches over which bin wins the penalized argmin for every training pair
//! and checks each hypothesis for feasibility; optionally the feasible step
//! vector is then chosen to minimize `K_n` inside the hypothesis' polytope.
//!
//! Notation: for pair `i` at a coordinate, `g_i` sits in its data bin and
//! `f_i` in its target bin. `K_n` compares the penalized minimum for `g_i`
//! against the penalized value at `f_i`.

mod constraints;
mod direct;
mod feasibility;
mod kn;
mod refine;
mod search;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{ensure_valid, GridSpec, TrainingSet};
use crate::stepreg::{coordinate_objective, is_quasiconvex, StepRegularizer};

pub use constraints::{project_unimodal, QuasiconvexConstraintSystem};
pub use direct::DirectConfig;
pub use feasibility::{feasibility_solve, CandidateAssignment, FeasibilityConfig, FeasiblePoint};
pub use kn::{build_kn, KnObjective};
pub use refine::RefineConfig;
pub use search::{candidate_search, SearchConfig, SearchOutcome};

use feasibility::DiffSystem;
use kn::slice_data;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscreteConfig {
    pub search: SearchConfig,
    /// Minimize `K_n` over the chosen assignment's polytope instead of taking
    /// the anchored shortest-path solution.
    pub refine: bool,
    pub refine_cfg: RefineConfig,
}

/// Per-coordinate diagnostics of a learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateReport {
    /// Position of the coordinate.
    pub coord: usize,
    /// Training error contributed by this coordinate under the learned step.
    pub objective: f64,
    /// `K_n` at the learned step.
    pub kn: f64,
    /// Assignments tested (discrete route only).
    pub checked: usize,
    /// The search hit its budget and fell back to the data bins.
    pub capped: bool,
    /// Constraints holding with equality at the returned point (discrete route only).
    pub active: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub reg: StepRegularizer,
    pub reports: Vec<CoordinateReport>,
}

impl LearnOutcome {
    /// Training objective summed over coordinates.
    pub fn objective(&self) -> f64 {
        self.reports.iter().map(|r| r.objective).sum()
    }

    pub fn capped_coordinates(&self) -> usize {
        self.reports.iter().filter(|r| r.capped).count()
    }
}

fn assemble(grid: GridSpec, results: Vec<(Vec<f64>, CoordinateReport)>) -> Result<LearnOutcome> {
    let (coeffs, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    for (j, c) in coeffs.iter().enumerate() {
        if !is_quasiconvex(c) {
            return Err(Error::Internal(format!("learned coordinate {j} is not quasiconvex")));
        }
    }
    Ok(LearnOutcome {
        reg: StepRegularizer::new(grid, coeffs)?,
        reports,
    })
}

/// Learns each coordinate by constrained minimization of `K_n`.
///
/// Every restart ends in a quasiconvex point; among those (and the zero step)
/// the one with the lowest training error is kept, ties going to lower `K_n`.
pub fn learn_direct(ts: &TrainingSet, grid: &GridSpec, cfg: &DirectConfig) -> Result<LearnOutcome> {
    ensure_valid(ts, grid)?;
    let results: Result<Vec<_>> = (0..ts.dim())
        .into_par_iter()
        .map(|j| {
            let pairs = slice_data(&ts.slice(j), grid)?;
            let r = direct::direct_coordinate(&pairs, grid, cfg, j);
            Ok((
                r.x,
                CoordinateReport {
                    coord: j,
                    objective: r.objective,
                    kn: r.kn,
                    checked: 0,
                    capped: false,
                    active: 0,
                },
            ))
        })
        .collect();
    assemble(*grid, results?)
}

/// Learns one coordinate by assignment search; returns the step and its report.
pub fn learn_discrete_coordinate(
    slice: &[(f64, f64)],
    grid: &GridSpec,
    cfg: &DiscreteConfig,
) -> Result<(Vec<f64>, CoordinateReport)> {
    let pairs = slice_data(slice, grid)?;
    let b = grid.bins();
    let out = search::search_pairs(&pairs, b, &cfg.search)?;
    let assign: Vec<usize> = out.assignment.bins.iter().map(|t| t - 1).collect();
    let mut x = out.point.x.clone();
    let mut active = out.point.active;
    if cfg.refine {
        let sys = DiffSystem::new(&pairs, &assign, b, &cfg.search.feasibility);
        x = refine::refine(&pairs, &assign, &sys, &x, out.point.pivot - 1, &cfg.refine_cfg);
        active = (0..b)
            .filter(|&p| sys.satisfied(&x, p, 1e-12)).map(|p| sys.active_count(&x, p))
            .next()
            .unwrap_or(active);
    }
    let kn = KnObjective::from_pairs(b, pairs).value(&x);
    let objective = coordinate_objective(&x, slice, grid);
    Ok((
        x,
        CoordinateReport {
            coord: 0,
            objective,
            kn,
            checked: out.checked,
            capped: out.capped,
            active,
        },
    ))
}

/// Learns each coordinate by best-first assignment search plus feasibility.
pub fn learn_discrete(ts: &TrainingSet, grid: &GridSpec, cfg: &DiscreteConfig) -> Result<LearnOutcome> {
    ensure_valid(ts, grid)?;
    let results: Result<Vec<_>> = (0..ts.dim())
        .into_par_iter()
        .map(|j| {
            learn_discrete_coordinate(&ts.slice(j), grid, cfg).map(|(x, mut rep)| {
                rep.coord = j;
                (x, rep)
            })
        })
        .collect();
    assemble(*grid, results?)
}

/// Learning route for [`resolution_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Route {
    Direct(DirectConfig),
    Discrete(DiscreteConfig),
}

impl Route {
    pub fn learn(&self, ts: &TrainingSet, grid: &GridSpec) -> Result<LearnOutcome> {
        match self {
            Route::Direct(c) => learn_direct(ts, grid, c),
            Route::Discrete(c) => learn_discrete(ts, grid, c),
        }
    }
}

/// Learns at each level in `levels` (offset scaled with the bin width) and
/// reports `(n, training objective)`.
pub fn resolution_sweep(
    ts: &TrainingSet,
    grid: &GridSpec,
    levels: impl IntoIterator<Item = u32>,
    route: &Route,
) -> Result<Vec<(u32, f64)>> {
    ensure_valid(ts, grid)?;
    levels
        .into_iter()
        .map(|n| {
            let g = grid.at_level(n)?;
            let out = route.learn(ts, &g)?;
            Ok((n, out.objective()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepreg::objective_i;

    fn worked() -> (TrainingSet, GridSpec) {
        (
            TrainingSet::from_arrays(vec![(vec![0.25], vec![0.75])]).unwrap(),
            GridSpec::with_default_eps(0, 1, 1).unwrap(),
        )
    }

    #[test]
    fn discrete_worked_example() {
        let (ts, grid) = worked();
        for refine in [false, true] {
            let cfg = DiscreteConfig {
                refine,
                ..Default::default()
            };
            let out = learn_discrete(&ts, &grid, &cfg).unwrap();
            assert_eq!(objective_i(&out.reg, &ts).unwrap(), 0.0625);
            assert_eq!(out.objective(), 0.0625);
            let c = out.reg.coeffs(0);
            assert!(c[1] - c[0] >= 0.0625);
        }
    }

    #[test]
    fn direct_matches_discrete_on_worked_example() {
        let (ts, grid) = worked();
        let d = learn_direct(&ts, &grid, &DirectConfig::default()).unwrap();
        assert_eq!(objective_i(&d.reg, &ts).unwrap(), 0.0625);
    }

    #[test]
    fn zero_noise_gives_zero_objective() {
        let grid = GridSpec::with_default_eps(-1, 2, 2).unwrap();
        let ts = TrainingSet::from_arrays(vec![
            (vec![0.3, -0.7, 1.9], vec![0.3, -0.7, 1.9]),
            (vec![1.1, 0.2, 0.5], vec![1.1, 0.2, 0.5]),
        ])
        .unwrap();
        let d = learn_discrete(&ts, &grid, &DiscreteConfig::default()).unwrap();
        assert_eq!(objective_i(&d.reg, &ts).unwrap(), 0.0);
        let d = learn_direct(&ts, &grid, &DirectConfig::default()).unwrap();
        assert_eq!(objective_i(&d.reg, &ts).unwrap(), 0.0);
    }

    #[test]
    fn sweep_on_worked_example() {
        let (ts, grid) = worked();
        let traj = resolution_sweep(&ts, &grid, 1..=3, &Route::Discrete(DiscreteConfig::default())).unwrap();
        assert_eq!(traj[0], (1, 0.0625));
        assert!(traj[1].1 <= 0.015625);
        assert!(traj[2].1 <= 0.00390625);
    }
}
