//! Semisupervised Bayesian predictive modeling.
//!
//! Mixture regression and discrimination, binary-cell prediction, factor
//! (principal-component) probit regression and kernel regression, each able
//! to take unlabeled covariates into account, plus a graph analyzer that
//! decides from a declared model factorization whether unlabeled data can
//! influence prediction at all.

pub mod binary;
pub mod data;
pub mod error;
pub mod factor;
pub mod harness;
pub mod kernel;
pub mod mixture;
pub mod probit;
pub mod relevance;
pub mod stochastics;

pub use error::{Error, Result};
pub use nalgebra;
pub use stochastics::{RngState, SpdMatrix};
