//! Multiresolution analysis: scaling filters, the pyramid transform, the
//! cascade iteration and joint filter/regularizer learning.

mod cascade;
mod filter;
mod joint;
mod transform;

pub use cascade::{cascade_phi, CascadeResult};
pub use filter::{
    check_qmf, lattice_filter, FilterSearchSpace, QmfCondition, QmfReport, ScalingFilter, QMF_SAMPLES,
    VANISHING_TOL,
};
pub use joint::{learn_joint, transform_training_set, FilterScore, JointOutcome};
pub use transform::{decompose, project_samples, reconstruct, Pyramid};
