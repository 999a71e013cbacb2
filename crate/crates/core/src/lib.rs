//! Linear biomarker combinations for multicenter case-control data.
//!
//! When a study spans several centers, a combination should discriminate
//! cases from controls *within* each center; pooling everything and fitting
//! one model lets center effects leak into the score. The summary used here
//! is the center-adjusted AUC (aAUC): a case-count-weighted average of the
//! per-center AUCs. This crate fits linear combinations by maximizing a
//! probit-smoothed aAUC over the unit sphere, optionally penalizing
//! variability of the per-center AUCs, and ships the machinery around that
//! estimator:
//!
//! - [`dataset`]: grouped case-control data, per-center views, standardization
//! - [`roc`]: exact empirical AUC, center weights, adjusted AUC, variability
//! - [`smooth`]: probit-smoothed center AUCs, penalized objective, gradients
//! - [`optimize`]: projected gradient ascent on the unit sphere
//! - [`logistic`]: fixed-intercept logistic regression (comparator and starts)
//! - [`pipeline`]: end-to-end fit and evaluation
//! - [`lococv`]: leave-one-center-out cross-validation over a penalty grid
//! - [`bootstrap`]: optimism correction of the apparent adjusted AUC
//! - [`sim`]: seeded generators and a replication-study driver
//!
//! The crate is `no_std` (with `alloc`); file formats and the command-line
//! front end live in the companion `saauc-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bootstrap;
pub mod dataset;
pub mod error;
pub mod lococv;
pub mod logistic;
pub mod math;
pub mod matrix;
pub mod optimize;
pub mod pipeline;
pub mod roc;
pub mod sim;
pub mod smooth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
