//! Iterative thresholded Landweber solver for `||K f - g||^2 + sum_i |||f|||_{W_i,p_i}^{p_i}`.

mod operator;
mod path;
mod solver;

pub use operator::{adjoint_mismatch, gate_norm, norm_estimate, scaled_problem, Dense, Diagonal, LinearOperator, Scaled};
pub use path::{f_dagger_diagonal, regularization_path, AlphaRule, PathPoint, PathReport};
pub use solver::{
    apply_t, iterate, iterate_bound, objective, surrogate_value, IterationRecord, IterationState, StopRule,
    MONOTONE_SLACK,
};
