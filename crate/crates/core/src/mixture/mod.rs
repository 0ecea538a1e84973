//! Gaussian mixture joint models for `(y, x)` with unlabeled covariates.
//!
//! Regression mode places components on the joint space and treats the
//! responses of unlabeled covariates as missing data; discriminant mode places
//! components on `x` with the class label as the component indicator.

mod gibbs;
mod model;
mod predict;

pub use gibbs::{fit_mixture, gibbs_step, initial_state, GibbsState, McmcSettings};
pub use model::{
    joint_to_conditional, niw_phi_theta_independence_check, ConditionalRegression, GaussianComponent, LabeledPoint,
    MixtureMode, MixtureParams, NiwMixturePrior, SemiSupDataset, SuffStats,
};
pub use predict::{classify, conditional_mixture_weights, predictive_density, predictive_regression_curve};
