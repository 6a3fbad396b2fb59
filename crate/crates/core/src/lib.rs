//! Least-squares model averaging toolkit.
//!
//! Combines candidate least-squares fits over an orthogonal basis with
//! weights chosen by a Mallows-type criterion, provides closed-form
//! shrinkage rules (dimension-adaptive averaging, soft/hard thresholding),
//! exact risk oracles for optimal model-averaging risk, and a seeded Monte
//! Carlo lab for risk-ratio experiments.

pub mod baselines;
pub mod candidates;
pub mod error;
pub mod estimators;
pub mod io;
pub mod qp;
pub mod risk;
pub mod rng;
pub mod simlab;
pub mod spectral;

pub use error::{Error, Result};
