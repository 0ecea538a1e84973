use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probit::{check_both_classes, probit_gibbs};
use crate::stochastics::special::normal_cdf;
use crate::stochastics::{RngState, SpdMatrix};

use super::{
    check_dims, graph_laplacian, kernel_matrix, knn_scale, KernelConfigSnapshot, KernelFit, KernelMode, RbfKernel,
};

const GRAM_JITTER: f64 = 1e-6;
const MAX_JITTER: f64 = 1e-2;

/// Prior and chain settings for [`rb_fit`].
///
/// The base-point values `f_B` get prior precision `K⁻¹/g + γ L`, where `K`
/// is the Gram matrix, `g = prior_scale` and `L` the kNN graph Laplacian of
/// the base points. With `graph_weight = 0` this is the Gram-proportional
/// prior `w ~ N(0, g K⁻¹)` on the expansion weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbSettings {
    pub prior_scale: f64,
    pub graph_weight: f64,
    pub knn: usize,
    pub intercept_variance: f64,
    pub n_burn: usize,
    pub n_keep: usize,
}

impl Default for RbSettings {
    fn default() -> Self {
        Self { prior_scale: 10.0, graph_weight: 1.0, knn: 5, intercept_variance: 4.0, n_burn: 200, n_keep: 300 }
    }
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Bayesian probit kernel regression with base points `labeled ∪ unlabeled`.
///
/// Inputs are put in a canonical order before fitting, so the result does
/// not depend on the order in which points are supplied.
pub fn rb_fit(
    labeled: &[(Vec<f64>, bool)],
    unlabeled: &[Vec<f64>],
    kernel: &RbfKernel,
    settings: &RbSettings,
    rng: &mut RngState,
) -> Result<KernelFit> {
    let labels: Vec<bool> = labeled.iter().map(|p| p.1).collect();
    check_both_classes(&labels)?;
    if !(settings.prior_scale > 0.0) || !(settings.graph_weight >= 0.0) || !(settings.intercept_variance > 0.0) {
        return Err(Error::param("prior scale and intercept variance must be positive, graph weight non-negative"));
    }
    let dim = labeled[0].0.len();
    let mut lab: Vec<(Vec<f64>, bool)> = labeled.to_vec();
    lab.sort_by(|a, b| lex(&a.0, &b.0).then(a.1.cmp(&b.1)));
    let mut base: Vec<Vec<f64>> = lab.iter().map(|p| p.0.clone()).chain(unlabeled.iter().cloned()).collect();
    check_dims(&base, dim)?;
    base.sort_by(|a, b| lex(a, b));
    let n_base = base.len();

    let raw = kernel_matrix(&base, &base, kernel)?;
    let mut jitter = GRAM_JITTER;
    let gram = loop {
        match SpdMatrix::new(&raw + DMatrix::identity(n_base, n_base) * jitter) {
            Ok(g) => break g,
            Err(_) if jitter < MAX_JITTER => jitter *= 10.0,
            Err(_) => return Err(Error::Singular("Gram matrix is singular even after jitter".into())),
        }
    };
    let gram_inv = gram.inverse();
    let mut precision = &gram_inv / settings.prior_scale;
    if settings.graph_weight > 0.0 && n_base > 1 {
        let k = settings.knn.clamp(1, n_base - 1);
        let scale = knn_scale(&base, k)?;
        let scale = if scale > 0.0 { scale } else { kernel.bandwidth() };
        let lap = graph_laplacian(&base, scale, Some(k))?;
        precision += lap.laplacian * settings.graph_weight;
    }
    let precision = SpdMatrix::new(0.5 * (&precision + precision.transpose()))
        .map_err(|_| Error::Singular("kernel prior precision is not positive definite".into()))?;
    let cov = precision.inverse();
    let cov = 0.5 * (&cov + cov.transpose()) + DMatrix::identity(n_base, n_base) * 1e-9;
    let root = SpdMatrix::new(cov)?.chol_factor();
    // w = K⁻¹ R e with e ~ N(0, I) has f_B = K w ~ N(0, R Rᵀ)
    let to_weights = &gram_inv * &root;

    let x_lab: Vec<Vec<f64>> = lab.iter().map(|p| p.0.clone()).collect();
    let feat = kernel_matrix(&x_lab, &base, kernel)? * &to_weights;
    let n = lab.len();
    let design = DMatrix::from_fn(n, n_base + 1, |i, j| if j == 0 { 1.0 } else { feat[(i, j - 1)] });
    let mut prior_prec = DMatrix::identity(n_base + 1, n_base + 1);
    prior_prec[(0, 0)] = 1.0 / settings.intercept_variance;
    let y: Vec<bool> = lab.iter().map(|p| p.1).collect();
    let draws = probit_gibbs(&design, &y, &prior_prec, settings.n_burn, settings.n_keep, rng)?;

    let mut weights = Vec::with_capacity(draws.len());
    let mut intercepts = Vec::with_capacity(draws.len());
    for d in &draws {
        intercepts.push(d[0]);
        weights.push((&to_weights * d.rows(1, n_base)).iter().copied().collect());
    }
    Ok(KernelFit {
        mode: KernelMode::BayesProbit,
        kernel: *kernel,
        base_points: base,
        weights,
        intercepts,
        config: KernelConfigSnapshot {
            bandwidth: kernel.bandwidth(),
            prior_scale: Some(settings.prior_scale),
            graph_weight: Some(settings.graph_weight),
            gamma_a: None,
            gamma_i: None,
        },
    })
}

/// Predictive probability with a 95% credible interval from the 2.5% and
/// 97.5% percentiles of the per-draw probabilities.
pub fn rb_predict(fit: &KernelFit, x: &[f64]) -> Result<(f64, [f64; 2])> {
    if fit.n_draws() == 0 {
        return Err(Error::param("kernel fit has no draws"));
    }
    if fit.base_points.first().is_some_and(|b| b.len() != x.len()) {
        return Err(Error::param("query point dimension does not match the fit"));
    }
    let mut p: Vec<f64> = fit.latent_values(x).into_iter().map(normal_cdf).collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.sort_by(f64::total_cmp);
    Ok((mean, [percentile(&p, 0.025), percentile(&p, 0.975)]))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
