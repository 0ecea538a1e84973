//! Radial-basis kernel models whose base points are the labeled and unlabeled
//! inputs together: a Bayesian probit kernel regression and Laplacian
//! regularized least squares.

mod bayes;
mod contour;
mod experiment;
mod graph;
mod laprls;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bayes::{rb_fit, rb_predict, RbSettings};
pub use contour::{decision_contour, level_crossings, probability_grid, Grid2d};
pub use experiment::{
    compare_on_split, covering_grid, field_correlation, pearson, rb_fit_default_bandwidth, KernelComparison,
    LabeledPoints, Split, TWO_CLUSTER_NOISE, TWO_CLUSTER_SIZE,
};
pub use graph::{graph_laplacian, knn_scale, GraphLaplacian};
pub use laprls::{laprls_fit, LapRlsProblem, LaplacianConfig};

/// Gaussian kernel `exp(−‖u − v‖² / (2σ²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    bandwidth: f64,
}

impl RbfKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::param(format!("kernel bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        (-sq_dist(a, b) / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(points: &[Vec<f64>], dim: usize) -> Result<()> {
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::data("points have inconsistent dimensions"));
    }
    Ok(())
}

/// `K[i, j] = k(a_i, b_j)`.
pub fn kernel_matrix(a: &[Vec<f64>], b: &[Vec<f64>], kernel: &RbfKernel) -> Result<DMatrix<f64>> {
    if let Some(first) = a.first().or(b.first()) {
        check_dims(a, first.len())?;
        check_dims(b, first.len())?;
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| kernel.eval(&a[i], &b[j])))
}

/// Median of all pairwise distances.
pub fn median_bandwidth(points: &[Vec<f64>]) -> Result<f64> {
    let mut d = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(sq_dist(&points[i], &points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return Err(Error::data("median bandwidth needs at least two points"));
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    if med > 0.0 {
        Ok(med)
    } else {
        Err(Error::data("all points coincide; bandwidth would be zero"))
    }
}

/// Base points of a kernel expansion and their Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDesign {
    pub base_points: Vec<Vec<f64>>,
    pub gram: DMatrix<f64>,
}

impl KernelDesign {
    pub fn new(base_points: Vec<Vec<f64>>, kernel: &RbfKernel) -> Result<Self> {
        let gram = kernel_matrix(&base_points, &base_points, kernel)?;
        Ok(Self { base_points, gram })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    BayesProbit,
    Laprls,
}

/// Hyperparameters a fit was produced with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfigSnapshot {
    pub bandwidth: f64,
    pub prior_scale: Option<f64>,
    pub graph_weight: Option<f64>,
    pub gamma_a: Option<f64>,
    pub gamma_i: Option<f64>,
}

/// A fitted expansion `f(x) = b + Σ_i w_i k(x, x_i)` over base points.
///
/// Bayesian fits hold one `(b, w)` pair per retained draw; LapRLS fits hold a
/// single pair with `b = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelFit {
    pub mode: KernelMode,
    pub kernel: RbfKernel,
    pub base_points: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub config: KernelConfigSnapshot,
}

impl KernelFit {
    /// `f(x)` for every stored draw.
    pub fn latent_values(&self, x: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self.base_points.iter().map(|b| self.kernel.eval(x, b)).collect();
        self.weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| b + w.iter().zip(&k).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    /// Mean of `Φ(f(x))` over draws. For LapRLS this is `Φ` of the single
    /// fitted value, a monotone score that crosses 0.5 where `f = 0`.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let v = self.latent_values(x);
        v.iter().map(|&f| crate::stochastics::special::normal_cdf(f)).sum::<f64>() / v.len() as f64
    }

    pub fn n_draws(&self) -> usize {
        self.weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_values() {
        let k = RbfKernel::new(0.7).unwrap();
        let m = kernel_matrix(&[vec![0.3, 0.3]], &[vec![0.3, 0.3]], &k).unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        let d = 0.7 * 2f64.sqrt();
        assert!((k.eval(&[0.0], &[d]) - (-1f64).exp()).abs() < 1e-15);
        assert!(RbfKernel::new(0.0).is_err());
    }

    #[test]
    fn median_of_three_points() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(median_bandwidth(&pts).unwrap(), 2.0);
        assert!(median_bandwidth(&[vec![1.0], vec![1.0]]).is_err());
    }
}
