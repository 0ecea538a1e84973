//! Latent-variable (Albert–Chib) Gibbs sampler for probit regression with a
//! Gaussian coefficient prior.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stochastics::special::normal_cdf;
use crate::stochastics::{sample_truncated_normal, standard_normal, RngState, SpdMatrix};

/// Draws `β` from the posterior of `Pr(y_i = 1) = Φ(h_iᵀ β)` under
/// `β ~ N(0, precision⁻¹)`, starting from `β = 0`.
///
/// Each sweep draws latent `z_i ~ N(h_iᵀ β, 1)` truncated to the side given
/// by `y_i`, then `β | z ~ N(V Hᵀ z, V)` with `V = (P + HᵀH)⁻¹`.
pub fn probit_gibbs(
    design: &DMatrix<f64>,
    labels: &[bool],
    precision: &DMatrix<f64>,
    n_burn: usize,
    n_keep: usize,
    rng: &mut RngState,
) -> Result<Vec<DVector<f64>>> {
    let (n, q) = design.shape();
    if labels.len() != n {
        return Err(Error::data(format!("{} labels for {n} design rows", labels.len())));
    }
    if precision.shape() != (q, q) {
        return Err(Error::param("prior precision does not match the design width"));
    }
    if n_keep == 0 {
        return Err(Error::param("need at least one retained draw"));
    }
    let post_prec = SpdMatrix::new(precision + design.transpose() * design)
        .map_err(|_| Error::Singular("probit posterior precision is not positive definite".into()))?;
    let cov = post_prec.inverse();
    let cov_ht = &cov * design.transpose();
    let chol = SpdMatrix::new(cov)?.chol_factor();
    let mut beta = DVector::zeros(q);
    let mut z = DVector::zeros(n);
    let mut out = Vec::with_capacity(n_keep);
    for it in 0..n_burn + n_keep {
        let eta = design * &beta;
        for i in 0..n {
            z[i] = sample_truncated_normal(eta[i], 1.0, labels[i], rng);
        }
        let e = DVector::from_fn(q, |_, _| standard_normal(rng));
        beta = &cov_ht * &z + &chol * e;
        if it >= n_burn {
            out.push(beta.clone());
        }
    }
    Ok(out)
}

/// Mean of `Φ(h · β)` over coefficient draws.
pub fn mean_probability(samples: &[DVector<f64>], h: &DVector<f64>) -> f64 {
    samples.iter().map(|b| normal_cdf(b.dot(h))).sum::<f64>() / samples.len() as f64
}

pub fn check_both_classes(labels: &[bool]) -> Result<()> {
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::data("labels must contain both classes"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_slope() {
        let mut rng = RngState::new(1);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / n as f64).collect();
        let labels: Vec<bool> = x.iter().map(|&v| 1.5 * v + 0.3 + standard_normal(&mut rng) > 0.0).collect();
        let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let s = probit_gibbs(&design, &labels, &(DMatrix::identity(2, 2) * 0.01), 300, 1000, &mut rng).unwrap();
        let slope: Vec<f64> = s.iter().map(|b| b[1]).collect();
        let m = slope.iter().sum::<f64>() / slope.len() as f64;
        let sd = (slope.iter().map(|v| (v - m).powi(2)).sum::<f64>() / slope.len() as f64).sqrt();
        assert!((m - 1.5).abs() < 3.0 * sd, "{m} ± {sd}");
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(check_both_classes(&[true, true]).is_err());
        assert!(check_both_classes(&[true, false]).is_ok());
    }
}
