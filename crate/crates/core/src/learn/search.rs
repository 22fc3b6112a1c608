//! Best-first search over candidate assignments.
//!
//! Assignments are visited in non-decreasing order of
//! `L = sum_i (f_i - x_i(r_i))^2`; the first one passing the feasibility test is
//! optimal among all realizable assignments in the (possibly pruned) product.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::problem::GridSpec;

use super::feasibility::{anchor, find_feasible, CandidateAssignment, DiffSystem, FeasibilityConfig, FeasiblePoint};
use super::kn::{slice_data, PairData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Bins kept per pair (per group of pairs sharing a noisy value); `None` keeps all.
    pub prune_k: Option<usize>,
    /// Assignments tested for feasibility before falling back to the data bins.
    pub max_checks: usize,
    pub feasibility: FeasibilityConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            prune_k: Some(8),
            max_checks: 50_000,
            feasibility: FeasibilityConfig::default(),
        }
    }
}

impl SearchConfig {
    /// Full enumeration without pruning or a check cap.
    pub fn exhaustive() -> Self {
        Self {
            prune_k: None,
            max_checks: usize::MAX,
            ..Self::default()
        }
    }
}

/// Result of [`candidate_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub assignment: CandidateAssignment,
    pub point: FeasiblePoint,
    /// `L` of the returned assignment; equals the coordinate's training objective
    /// under the returned point.
    pub score: f64,
    /// Assignments tested for feasibility.
    pub checked: usize,
    /// The check budget ran out and the data-bin assignment was returned.
    pub capped: bool,
}

/// Finds the realizable assignment of minimal `L` for one coordinate.
pub fn candidate_search(slice: &[(f64, f64)], grid: &GridSpec, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let pairs = slice_data(slice, grid)?;
    search_pairs(&pairs, grid.bins(), cfg)
}

/// Pairs with bit-identical noisy values always share an argmin bin, so they are
/// searched as one unit.
struct Group {
    members: Vec<usize>,
    /// `(summed cost, bin)` in increasing cost order.
    options: Vec<(f64, usize)>,
}

fn groups(pairs: &[PairData], b: usize, prune_k: Option<usize>) -> Vec<Group> {
    let mut by_value: HashMap<u64, usize> = HashMap::new();
    let mut out: Vec<Group> = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        match by_value.get(&p.g.to_bits()) {
            Some(&k) => out[k].members.push(i),
            None => {
                by_value.insert(p.g.to_bits(), out.len());
                out.push(Group {
                    members: vec![i],
                    options: Vec::new(),
                });
            }
        }
    }
    for grp in &mut out {
        let home = pairs[grp.members[0]].home;
        let mut opts: Vec<(f64, usize)> = (0..b)
            .map(|t| (grp.members.iter().map(|&i| pairs[i].cost(t)).sum::<f64>(), t))
            .collect();
        opts.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        if let Some(k) = prune_k {
            let k = k.clamp(1, b);
            if !opts[..k].iter().any(|o| o.1 == home) {
                let h = opts.iter().position(|o| o.1 == home).unwrap();
                let keep = opts[h];
                opts.truncate(k);
                opts.push(keep);
            } else {
                opts.truncate(k);
            }
        }
        grp.options = opts;
    }
    out
}

#[derive(Debug)]
struct Node {
    cost: f64,
    ranks: Vec<usize>,
    last: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed so the max-heap pops the cheapest node; ties by rank vector for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.ranks.cmp(&self.ranks))
    }
}

pub(crate) fn search_pairs(pairs: &[PairData], b: usize, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let grps = groups(pairs, b, cfg.prune_k);
    let to_assignment = |ranks: &[usize]| -> Vec<usize> {
        let mut a = vec![0; pairs.len()];
        for (g, &r) in grps.iter().zip(ranks) {
            for &i in &g.members {
                a[i] = g.options[r].1;
            }
        }
        a
    };
    let start = vec![0.0; b];
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        cost: grps.iter().map(|g| g.options[0].0).sum(),
        ranks: vec![0; grps.len()],
        last: 0,
    });
    let mut checked = 0usize;
    while let Some(node) = heap.pop() {
        if checked >= cfg.max_checks {
            break;
        }
        let assign = to_assignment(&node.ranks);
        checked += 1;
        let sys = DiffSystem::new(pairs, &assign, b, &cfg.feasibility);
        if let Some((mut x, pivot)) = find_feasible(&sys, b, &start, pivot_order(&assign, b)) {
            anchor(&mut x);
            let active = sys.active_count(&x, pivot);
            let score = pairs.iter().zip(&assign).map(|(p, &r)| p.cost(r)).sum();
            return Ok(SearchOutcome {
                assignment: CandidateAssignment {
                    bins: assign.iter().map(|t| t + 1).collect(),
                },
                point: FeasiblePoint {
                    x,
                    pivot: pivot + 1,
                    active,
                },
                score,
                checked,
                capped: false,
            });
        }
        for j in node.last..grps.len() {
            let r = node.ranks[j];
            if r + 1 < grps[j].options.len() {
                let mut ranks = node.ranks.clone();
                ranks[j] += 1;
                heap.push(Node {
                    cost: node.cost - grps[j].options[r].0 + grps[j].options[r + 1].0,
                    ranks,
                    last: j,
                });
            }
        }
    }
    // the data-bin assignment is always realizable by the zero vector
    let assign: Vec<usize> = pairs.iter().map(|p| p.home).collect();
    let sys = DiffSystem::new(pairs, &assign, b, &cfg.feasibility);
    let (mut x, pivot) = find_feasible(&sys, b, &start, 0..b)
        .ok_or_else(|| Error::Internal("data-bin assignment infeasible".into()))?;
    anchor(&mut x);
    let active = sys.active_count(&x, pivot);
    Ok(SearchOutcome {
        assignment: CandidateAssignment {
            bins: assign.iter().map(|t| t + 1).collect(),
        },
        point: FeasiblePoint {
            x,
            pivot: pivot + 1,
            active,
        },
        score: pairs.iter().map(|p| p.gap).sum(),
        checked,
        capped: true,
    })
}

/// Pivots tried in order: assigned bins first, then the rest.
fn pivot_order(assign: &[usize], b: usize) -> Vec<usize> {
    let mut seen = vec![false; b];
    let mut order = Vec::with_capacity(b);
    let mut assigned: Vec<usize> = assign.to_vec();
    assigned.sort_unstable();
    for t in assigned.into_iter().chain(0..b) {
        if !seen[t] {
            seen[t] = true;
            order.push(t);
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_pairs_stay_home() {
        let grid = GridSpec::with_default_eps(0, 2, 2).unwrap();
        let slice = [(0.7, 0.7), (1.3, 1.3)];
        let out = candidate_search(&slice, &grid, &SearchConfig::default()).unwrap();
        assert_eq!(out.assignment, CandidateAssignment::data_bins(&slice, &grid));
        assert_eq!(out.score, 0.0);
    }

    #[test]
    fn worked_example() {
        let grid = GridSpec::with_default_eps(0, 1, 1).unwrap();
        let out = candidate_search(&[(0.25, 0.75)], &grid, &SearchConfig::default()).unwrap();
        assert_eq!(out.assignment.bins, vec![1]);
        assert_eq!(out.score, 0.0625);
        assert_eq!(out.checked, 1);
    }

    #[test]
    fn conflicting_pairs_compromise() {
        // identical noisy values with different clean targets must share a bin
        let grid = GridSpec::with_default_eps(0, 1, 2).unwrap();
        let slice = [(0.1, 0.6), (0.3, 0.6)];
        let out = candidate_search(&slice, &grid, &SearchConfig::exhaustive()).unwrap();
        assert_eq!(out.assignment.bins[0], out.assignment.bins[1]);
        // bin 1 (x = 0.25) costs 0.0225 + 0.0025, bin 2 (x = 0.5) costs 0.16 + 0.04
        assert_eq!(out.assignment.bins[0], 1);
        assert!((out.score - 0.025).abs() < 1e-15);
    }
}
