use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{check_dims, graph_laplacian, kernel_matrix, KernelConfigSnapshot, KernelFit, KernelMode, RbfKernel};

const RCOND_FLOOR: f64 = 1e-12;

/// Graph used for the manifold penalty. A missing bandwidth falls back to the
/// kernel bandwidth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LaplacianConfig {
    pub bandwidth: Option<f64>,
    pub knn: Option<usize>,
}

/// Squared-loss manifold-regularized objective over an expansion on all
/// `N = n + n_m` points, labeled first:
///
/// `J(α) = (1/n) Σ_{i ≤ n} (y_i − (Kα)_i)² + γ_A αᵀKα + γ_I / N² (Kα)ᵀ L (Kα)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LapRlsProblem {
    pub gram: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub y: Vec<f64>,
    pub gamma_a: f64,
    pub gamma_i: f64,
}

impl LapRlsProblem {
    pub fn n_labeled(&self) -> usize {
        self.y.len()
    }

    pub fn n_total(&self) -> usize {
        self.gram.nrows()
    }

    pub fn objective(&self, alpha: &DVector<f64>) -> f64 {
        let n = self.n_labeled() as f64;
        let big = self.n_total() as f64;
        let f = &self.gram * alpha;
        let loss: f64 = self.y.iter().enumerate().map(|(i, y)| (y - f[i]).powi(2)).sum::<f64>() / n;
        loss + self.gamma_a * alpha.dot(&f) + self.gamma_i / (big * big) * f.dot(&(&self.laplacian * &f))
    }

    pub fn gradient(&self, alpha: &DVector<f64>) -> DVector<f64> {
        let n = self.n_labeled() as f64;
        let big = self.n_total() as f64;
        let f = &self.gram * alpha;
        let mut resid = DVector::zeros(self.n_total());
        for (i, y) in self.y.iter().enumerate() {
            resid[i] = f[i] - y;
        }
        let inner =
            resid * (2.0 / n) + &f * (2.0 * self.gamma_a) + (&self.laplacian * &f) * (2.0 * self.gamma_i / (big * big));
        &self.gram * inner
    }

    /// Solves `(JK + γ_A n I + γ_I n/N² L K) α = J y`.
    pub fn solve(&self) -> Result<DVector<f64>> {
        let n = self.n_labeled();
        let big = self.n_total();
        let mut jk = self.gram.clone();
        for i in n..big {
            jk.row_mut(i).fill(0.0);
        }
        let c = self.gamma_i * n as f64 / (big * big) as f64;
        let m = jk + DMatrix::identity(big, big) * (self.gamma_a * n as f64) + &self.laplacian * &self.gram * c;
        let sv = m.singular_values();
        let smax = sv.max();
        if !(smax > 0.0) || sv.min() / smax < RCOND_FLOOR {
            return Err(Error::Singular(format!(
                "LapRLS system is singular (gamma_a = {}); use a positive gamma_a",
                self.gamma_a
            )));
        }
        let mut rhs = DVector::zeros(big);
        for (i, y) in self.y.iter().enumerate() {
            rhs[i] = *y;
        }
        m.lu().solve(&rhs).ok_or_else(|| Error::Singular("LapRLS system is singular; use a positive gamma_a".into()))
    }
}

/// Laplacian regularized least squares with base points `labeled ∪ unlabeled`
/// (labeled first, in the given order).
pub fn laprls_fit(
    labeled: &[(Vec<f64>, f64)],
    unlabeled: &[Vec<f64>],
    kernel: &RbfKernel,
    gamma_a: f64,
    gamma_i: f64,
    graph: &LaplacianConfig,
) -> Result<KernelFit> {
    if labeled.is_empty() {
        return Err(Error::data("LapRLS needs at least one labeled point"));
    }
    if !(gamma_a >= 0.0) || !(gamma_i >= 0.0) {
        return Err(Error::param("gamma_a and gamma_i must be non-negative"));
    }
    let base: Vec<Vec<f64>> = labeled.iter().map(|p| p.0.clone()).chain(unlabeled.iter().cloned()).collect();
    check_dims(&base, base[0].len())?;
    let gram = kernel_matrix(&base, &base, kernel)?;
    let laplacian = if base.len() >= 2 {
        graph_laplacian(&base, graph.bandwidth.unwrap_or(kernel.bandwidth()), graph.knn)?.laplacian
    } else {
        DMatrix::zeros(1, 1)
    };
    let problem = LapRlsProblem { gram, laplacian, y: labeled.iter().map(|p| p.1).collect(), gamma_a, gamma_i };
    let alpha = problem.solve()?;
    Ok(KernelFit {
        mode: KernelMode::Laprls,
        kernel: *kernel,
        base_points: base,
        weights: vec![alpha.iter().copied().collect()],
        intercepts: vec![0.0],
        config: KernelConfigSnapshot {
            bandwidth: kernel.bandwidth(),
            prior_scale: None,
            graph_weight: None,
            gamma_a: Some(gamma_a),
            gamma_i: Some(gamma_i),
        },
    })
}
