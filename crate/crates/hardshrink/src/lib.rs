//! Sparse and low-rank estimation by iterative hard thresholding.
//!
//! The crate provides the thresholding/projection operators, gradient-based
//! solvers built on them (plain and fully corrective, two-stage, partial
//! hard thresholding, and a low-rank matrix variant), quadratic objectives
//! for clean and corrupted regression data together with restricted
//! curvature diagnostics, synthetic problem generators, and two baseline
//! methods (proximal-gradient lasso and forward-backward greedy selection)
//! used for runtime comparisons.

pub mod baselines;
pub mod error;
pub mod numkit;
pub mod objectives;
pub mod projections;
pub mod solvers;
pub mod statgen;

pub use error::{Error, Result};
pub use numkit::{Matrix, RngStream, Vector};
