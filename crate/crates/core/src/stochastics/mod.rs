//! Seeded random-number core, distribution samplers and densities.
//!
//! Every sampler takes an explicit [`RngState`]; there is no global generator.

mod dcor;
mod rng;
mod samplers;
mod spd;
pub mod special;

pub use dcor::{distance_correlation, permutation_independence_test, IndependenceTest};
pub use rng::{split_stream, RngState};
pub(crate) use samplers::centered_logpdf;
pub use samplers::{
    inverse_wishart_mean, mvn_logpdf, open_uniform, sample_beta, sample_dirichlet, sample_gamma,
    sample_inverse_wishart, sample_ln_gamma, sample_mvn, sample_truncated_normal, standard_normal, IwConvention,
};
pub use spd::SpdMatrix;
