//! Sufficient dimension reduction for induced responses.
//!
//! The central subspace of an induced response `Y_g = g(Y)` (typically the
//! threshold indicator `I(Y <= t)`) is estimated in two stages: a kernel built
//! from the full response yields a projection `P_B`, and the induced-response
//! kernel is projected onto it before its leading eigenvectors are extracted.
//! Censored responses are handled by double slicing and Kaplan-Meier based
//! moment estimators.
//!
//! Module map:
//!
//! - [`linalg`]: symmetric eigensolver, inverse square root, pseudo-inverse,
//!   subspace distances.
//! - [`dataset`] / [`kernels`]: standardization, slicing, SIR and SAVE kernels.
//! - [`survival`]: Kaplan-Meier curves and censoring-adjusted kernels.
//! - [`estimator`]: direct and two-stage fits, MERC dimension selection.
//! - [`simgen`]: seeded generators for the simulation models.
//! - [`harness`]: Monte Carlo cells, tables and the motivating scenario.
//!
//! Replications run on rayon when the `parallel` feature (default) is on and
//! fall back to a sequential loop otherwise; results are identical either way.

pub mod dataset;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernels;
pub mod linalg;
mod par;
pub mod simgen;
pub mod survival;

pub use dataset::DataSet;
pub use error::{Result, SdrError, Warning};
pub use estimator::{
    fit_direct, fit_two_stage, merc_select, merc_select_induced, FitResult, InducedMap,
    KernelMethod, SdrMethod,
};
pub use harness::Parallelism;
pub use kernels::{KernelEstimate, SliceAssignment, Standardizer};
pub use linalg::{EigenPairs, Subspace, SymMatrix};
pub use survival::{kaplan_meier, SurvivalCurve};
