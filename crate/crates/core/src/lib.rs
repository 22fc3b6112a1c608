//! Learning denoising regularizers from paired clean/noisy training data.
//!
//! The crate covers three families of learned regularization terms:
//!
//! * per-coordinate quasiconvex step functions on a dyadic grid ([`stepreg`], [`learn`]),
//! * weighted `l^p` multi-penalties with learned weights `lambda` ([`shrink`], [`paramlearn`]),
//! * a scaling filter chosen jointly with a step regularizer ([`mra`]).
//!
//! Denoising with a learned regularizer is closed form for identity and
//! diagonal forward operators and uses thresholded Landweber iteration
//! ([`ista`]) otherwise. [`datagen`] produces reproducible synthetic corpora.

pub mod datagen;
pub mod error;
pub mod ista;
pub mod learn;
pub mod mra;
pub mod paramlearn;
pub mod problem;
pub mod shrink;
pub mod stepreg;

pub use error::{Error, Result};
pub use problem::{validate_problem, CoefficientVector, GridSpec, TrainingSet, Violation};
pub use shrink::{MultiPenalty, PenaltyTerm};
pub use stepreg::StepRegularizer;
