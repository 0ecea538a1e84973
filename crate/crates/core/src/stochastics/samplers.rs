use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::special::LN_2PI;
use super::{RngState, SpdMatrix};
use crate::error::{Error, Result};

pub fn standard_normal(rng: &mut RngState) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform draw on the open interval (0, 1).
pub fn open_uniform(rng: &mut RngState) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gamma(shape, rate 1) draw.
pub fn sample_gamma(shape: f64, rng: &mut RngState) -> Result<f64> {
    Ok(sample_ln_gamma(shape, rng)?.exp())
}

/// Log of a Gamma(shape, 1) draw, exact for tiny shapes.
///
/// For `shape < 1` uses `G = G' · U^{1/shape}` with `G' ~ Gamma(shape + 1)`,
/// evaluated in log-space so that draws far below `f64::MIN_POSITIVE` keep
/// their relative magnitudes.
pub fn sample_ln_gamma(shape: f64, rng: &mut RngState) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::param(format!("gamma shape must be positive, got {shape}")));
    }
    if shape < 1.0 {
        let g = Gamma::new(shape + 1.0, 1.0).map_err(|e| Error::param(e.to_string()))?;
        let base: f64 = g.sample(rng);
        Ok(base.ln() + open_uniform(rng).ln() / shape)
    } else {
        let g = Gamma::new(shape, 1.0).map_err(|e| Error::param(e.to_string()))?;
        let v: f64 = g.sample(rng);
        Ok(v.ln())
    }
}

pub fn sample_beta(a: f64, b: f64, rng: &mut RngState) -> Result<f64> {
    let p = sample_dirichlet(&[a, b], rng)?;
    Ok(p[0])
}

/// Dirichlet draw, normalized in log-space.
pub fn sample_dirichlet(alpha: &[f64], rng: &mut RngState) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::param("Dirichlet needs at least one concentration"));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::param(format!("Dirichlet concentration must be positive, got {a}")));
    }
    let logs = alpha.iter().map(|&a| sample_ln_gamma(a, rng)).collect::<Result<Vec<_>>>()?;
    let mut p = super::special::softmax(&logs);
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// How the inverse-Wishart degrees-of-freedom argument is read.
///
/// `Standard`: `Σ ~ IW(ν, S)` has density
/// `∝ |Σ|^{-(ν+p+1)/2} exp(-tr(S Σ⁻¹)/2)`, requires `ν > p − 1`, and has mean
/// `S/(ν − p − 1)` when `ν > p + 1`.
///
/// `Dawid`: the shape parameter `δ` with `ν = δ + p − 1`, so any `δ > 0` is
/// proper and the mean is `S/(δ − 2)` when `δ > 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IwConvention {
    #[default]
    Standard,
    Dawid,
}

impl IwConvention {
    /// Converts a degrees-of-freedom argument to the standard `ν`.
    pub fn standard_dof(self, dof: f64, dim: usize) -> f64 {
        match self {
            IwConvention::Standard => dof,
            IwConvention::Dawid => dof + dim as f64 - 1.0,
        }
    }
}

/// Closed-form mean of `IW(ν, S)` (standard convention), if it exists.
pub fn inverse_wishart_mean(dof: f64, scale: &SpdMatrix) -> Option<DMatrix<f64>> {
    let p = scale.dim() as f64;
    (dof > p + 1.0).then(|| scale.matrix() / (dof - p - 1.0))
}

/// Draws `Σ ~ IW(dof, scale)` in the standard convention.
///
/// Uses the Bartlett decomposition of `W = Σ⁻¹ ~ Wishart(dof, scale⁻¹)`:
/// `W = (L A)(L A)ᵀ` with `L Lᵀ = scale⁻¹`, `A` lower triangular,
/// `A_ii² ~ χ²(dof − i)` and `A_ij ~ N(0, 1)` below the diagonal.
pub fn sample_inverse_wishart(dof: f64, scale: &SpdMatrix, rng: &mut RngState) -> Result<SpdMatrix> {
    let p = scale.dim();
    if !(dof > p as f64 - 1.0) || !dof.is_finite() {
        return Err(Error::param(format!("inverse-Wishart dof must exceed dim - 1 = {}, got {dof}", p as f64 - 1.0)));
    }
    let prec = SpdMatrix::new(scale.inverse())?;
    let l = prec.chol_factor();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi2 = 2.0 * sample_gamma((dof - i as f64) / 2.0, rng)?;
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    let m = l * a;
    let m_inv = m.solve_lower_triangular(&DMatrix::identity(p, p)).ok_or_else(|| Error::NumericalFailure {
        message: "inverse-Wishart Bartlett factor is singular".into(),
        diagnostics: vec![("dof".into(), dof)],
    })?;
    SpdMatrix::new(m_inv.transpose() * m_inv)
}

/// Draws from `N(mu, sigma)` as `mu + L z`.
pub fn sample_mvn(mu: &DVector<f64>, sigma: &SpdMatrix, rng: &mut RngState) -> Result<DVector<f64>> {
    if mu.len() != sigma.dim() {
        return Err(Error::param(format!("mean has dim {} but covariance has dim {}", mu.len(), sigma.dim())));
    }
    let z = DVector::from_fn(mu.len(), |_, _| standard_normal(rng));
    Ok(mu + sigma.cholesky().l_dirty().lower_triangle() * z)
}

/// Log-density of `N(mu, sigma)` at `x`.
pub fn mvn_logpdf(x: &DVector<f64>, mu: &DVector<f64>, sigma: &SpdMatrix) -> Result<f64> {
    if x.len() != mu.len() || mu.len() != sigma.dim() {
        return Err(Error::param(format!(
            "non-conformable dims: x {}, mu {}, sigma {}",
            x.len(),
            mu.len(),
            sigma.dim()
        )));
    }
    let diff = x - mu;
    Ok(centered_logpdf(&diff, sigma))
}

pub(crate) fn centered_logpdf(diff: &DVector<f64>, sigma: &SpdMatrix) -> f64 {
    let d = diff.len() as f64;
    -0.5 * (d * LN_2PI + sigma.ln_det() + sigma.mahalanobis_sq(diff))
}

/// Draws from `N(mu, sigma²)` restricted to `(0, ∞)` or `(−∞, 0)`.
///
/// Standardizes to a one-sided bound `z > a`. For `a ≤ 0.45` uses plain
/// rejection from the normal; further in the tail uses Robert's
/// exponential-proposal rejection with the optimal rate.
pub fn sample_truncated_normal(mu: f64, sigma: f64, positive_side: bool, rng: &mut RngState) -> f64 {
    assert!(sigma > 0.0, "truncated normal needs sigma > 0");
    // work on the side where the bound is a lower bound
    let (m, sign) = if positive_side { (mu, 1.0) } else { (-mu, -1.0) };
    let a = -m / sigma;
    let z = loop {
        let z = lower_truncated_std_normal(a, rng);
        if m + sigma * z > 0.0 {
            break z;
        }
    };
    sign * (m + sigma * z)
}

fn lower_truncated_std_normal(a: f64, rng: &mut RngState) -> f64 {
    if a <= 0.45 {
        loop {
            let z = standard_normal(rng);
            if z > a {
                return z;
            }
        }
    }
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let z = a - open_uniform(rng).ln() / rate;
        let log_accept = -0.5 * (z - rate) * (z - rate);
        if open_uniform(rng).ln() <= log_accept {
            return z;
        }
    }
}
