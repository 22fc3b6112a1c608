//! Joint choice of scaling filter and step regularizer by exhaustive search
//! over a finite filter space.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learn::{learn_discrete, DiscreteConfig};
use crate::problem::{ensure_consistent, validate_problem, GridSpec, TrainingSet};
use crate::stepreg::StepRegularizer;

use super::filter::{check_qmf, FilterSearchSpace, ScalingFilter};
use super::transform::{decompose, project_samples};

/// Outcome for one member of the filter space.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterScore {
    pub filter: ScalingFilter,
    /// Training objective with the filter's learned regularizer, if it was scored.
    pub objective: Option<f64>,
    /// Why the filter was skipped.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub filter: ScalingFilter,
    pub reg: StepRegularizer,
    pub objective: f64,
    /// Position of the chosen filter in the space.
    pub index: usize,
    /// Every member of the space in order.
    pub scores: Vec<FilterScore>,
}

/// Transforms every pair of a sample-domain training set into pyramid coefficients.
pub fn transform_training_set(ts: &TrainingSet, filter: &ScalingFilter, levels: usize) -> Result<TrainingSet> {
    ensure_consistent(ts)?;
    let pairs = ts
        .pairs()
        .iter()
        .map(|(f, g)| {
            let tf = decompose(&project_samples(f.values()), filter, levels)?.flatten();
            let tg = decompose(&project_samples(g.values()), filter, levels)?.flatten();
            Ok((tf, tg))
        })
        .collect::<Result<Vec<_>>>()?;
    TrainingSet::new(pairs)
}

/// Learns a step regularizer in the coefficient domain of every filter in
/// `space` and keeps the filter with the lowest training objective
/// (ties go to the earlier filter).
///
/// Filters failing the orthonormality check, or whose coefficients leave the
/// grid, are skipped and reported.
pub fn learn_joint(
    ts_samples: &TrainingSet,
    space: &FilterSearchSpace,
    levels: usize,
    grid: &GridSpec,
    cfg: &DiscreteConfig,
    qmf_tol: f64,
) -> Result<JointOutcome> {
    let filters = space.filters();
    let results: Vec<(FilterScore, Option<StepRegularizer>)> = filters
        .par_iter()
        .map(|filter| {
            let report = check_qmf(filter, qmf_tol);
            if !report.ok() {
                return Ok((
                    FilterScore {
                        filter: filter.clone(),
                        objective: None,
                        skipped: Some(format!("orthonormality check failed: {:?}", report.violated)),
                    },
                    None,
                ));
            }
            let ts = transform_training_set(ts_samples, filter, levels)?;
            let violations = validate_problem(&ts, grid);
            if let Some(v) = violations.first() {
                return Ok((
                    FilterScore {
                        filter: filter.clone(),
                        objective: None,
                        skipped: Some(format!("{} coefficients off-grid, e.g. {v}", violations.len())),
                    },
                    None,
                ));
            }
            let out = learn_discrete(&ts, grid, cfg)?;
            Ok((
                FilterScore {
                    filter: filter.clone(),
                    objective: Some(out.objective()),
                    skipped: None,
                },
                Some(out.reg),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, (s, _)) in results.iter().enumerate() {
        if let Some(v) = s.objective {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    let (index, objective) =
        best.ok_or_else(|| Error::Domain("no filter in the search space could be scored".into()))?;
    let (scores, regs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let reg = regs.into_iter().nth(index).flatten().expect("scored filter has a regularizer");
    Ok(JointOutcome {
        filter: scores[index].filter.clone(),
        reg,
        objective,
        index,
        scores,
    })
}
