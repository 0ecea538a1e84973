//! Latent-factor regression and its empirical principal-component limit.
//!
//! Factors are the leading right-singular directions of the centered design
//! matrix. Computed from labeled rows alone or from labeled and unlabeled
//! rows together, they feed a probit regression on the factor scores.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probit::{check_both_classes, mean_probability, probit_gibbs};
use crate::stochastics::{standard_normal, RngState, SpdMatrix};

/// `y = αᵀλ + ε`, `x = Bλ + ν` with `λ ~ N(0, I_k)`, `ε ~ N(0, σ²)`,
/// `ν ~ N(0, Ψ)`, `Ψ` diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub loadings: DMatrix<f64>,
    pub psi: DVector<f64>,
    pub alpha: DVector<f64>,
    pub sigma2: f64,
}

impl FactorModel {
    pub fn new(loadings: DMatrix<f64>, psi: DVector<f64>, alpha: DVector<f64>, sigma2: f64) -> Result<Self> {
        let m = Self { loadings, psi, alpha, sigma2 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, k) = self.loadings.shape();
        if k > p {
            return Err(Error::param(format!("k = {k} exceeds p = {p}")));
        }
        if self.psi.len() != p || self.alpha.len() != k {
            return Err(Error::param("psi must have length p and alpha length k"));
        }
        if self.psi.iter().any(|v| !(*v > 0.0)) || !(self.sigma2 > 0.0) {
            return Err(Error::param("psi entries and sigma2 must be positive"));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn k(&self) -> usize {
        self.loadings.ncols()
    }
}

/// Covariance of `x` implied by the factor model, `BBᵀ + Ψ`.
pub fn implied_x_marginal(model: &FactorModel) -> Result<SpdMatrix> {
    model.validate()?;
    let mut m = &model.loadings * model.loadings.transpose();
    for i in 0..model.p() {
        m[(i, i)] += model.psi[i];
    }
    SpdMatrix::new(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedFactorData {
    /// Continuous responses, or 0/1 labels in binary mode.
    pub y: Vec<f64>,
    /// `n × p` design.
    pub x: DMatrix<f64>,
    /// `n × k` latent factors.
    pub factors: DMatrix<f64>,
}

/// Draws `n` observations. In binary mode `y = 1{αᵀλ + ε > 0}`, a probit
/// link on the linear predictor.
pub fn simulate_factor_data(
    model: &FactorModel,
    n: usize,
    binary: bool,
    rng: &mut RngState,
) -> Result<SimulatedFactorData> {
    model.validate()?;
    if n == 0 {
        return Err(Error::param("need n >= 1"));
    }
    let (p, k) = (model.p(), model.k());
    let sd = model.sigma2.sqrt();
    let mut y = Vec::with_capacity(n);
    let mut x = DMatrix::zeros(n, p);
    let mut factors = DMatrix::zeros(n, k);
    for i in 0..n {
        let lambda = DVector::from_fn(k, |_, _| standard_normal(rng));
        let signal = model.alpha.dot(&lambda) + sd * standard_normal(rng);
        y.push(if binary { f64::from(u8::from(signal > 0.0)) } else { signal });
        let xi = &model.loadings * &lambda;
        for j in 0..p {
            x[(i, j)] = xi[j] + model.psi[j].sqrt() * standard_normal(rng);
        }
        factors.row_mut(i).copy_from(&lambda.transpose());
    }
    Ok(SimulatedFactorData { y, x, factors })
}

/// Column means and leading right-singular directions of a design matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFactors {
    pub center: DVector<f64>,
    /// `p × k`, orthonormal columns.
    pub projection: DMatrix<f64>,
    /// Descending.
    pub singular_values: DVector<f64>,
}

impl EmpiricalFactors {
    pub fn k(&self) -> usize {
        self.projection.ncols()
    }

    /// Flips the sign of projection column `j`.
    pub fn flip(&mut self, j: usize) {
        let mut col = self.projection.column_mut(j);
        col.neg_mut();
    }
}

/// Top-`k` principal directions of `rows` (one observation per row), centered
/// at the mean of exactly these rows.
///
/// Each direction is signed so that its largest-magnitude entry is positive.
/// When `k` exceeds the numerical rank it is reduced with a warning.
pub fn compute_empirical_factors(rows: &DMatrix<f64>, k: usize) -> Result<EmpiricalFactors> {
    let (n, p) = rows.shape();
    if n < 2 {
        return Err(Error::data("need at least two rows"));
    }
    if k == 0 || k > n.min(p) {
        return Err(Error::param(format!("k = {k} must lie in 1..={}", n.min(p))));
    }
    let center = DVector::from_fn(p, |j, _| rows.column(j).mean());
    let mut z = rows.clone();
    for j in 0..p {
        let c = center[j];
        z.column_mut(j).add_scalar_mut(-c);
    }
    // right-singular vectors of Z are the left-singular vectors of Zᵀ
    let (values, vectors) = if n >= p {
        let svd = z.svd(false, true);
        let vt =
            svd.v_t.ok_or_else(|| Error::NumericalFailure { message: "SVD failed".into(), diagnostics: vec![] })?;
        (svd.singular_values, vt.transpose())
    } else {
        let svd = z.transpose().svd(true, false);
        let u = svd.u.ok_or_else(|| Error::NumericalFailure { message: "SVD failed".into(), diagnostics: vec![] })?;
        (svd.singular_values, u)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let top = values[order[0]];
    let tol = top * n.max(p) as f64 * f64::EPSILON;
    let rank = order.iter().filter(|&&i| values[i] > tol).count();
    let k_used = if k > rank {
        warn!("requested {k} factors but numerical rank is {rank}; using {rank}");
        rank.max(1)
    } else {
        k
    };
    let mut projection = DMatrix::zeros(p, k_used);
    let mut sv = DVector::zeros(k_used);
    for (c, &i) in order.iter().take(k_used).enumerate() {
        let mut col = vectors.column(i).into_owned();
        let lead = col.iter().copied().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map_or(0, |(j, _)| j);
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        projection.set_column(c, &col);
        sv[c] = values[i];
    }
    Ok(EmpiricalFactors { center, projection, singular_values: sv })
}

/// Factor scores `(x − center)ᵀ V`.
pub fn project(factors: &EmpiricalFactors, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != factors.center.len() {
        return Err(Error::param(format!("x has dim {} but factors expect {}", x.len(), factors.center.len())));
    }
    Ok(factors.projection.tr_mul(&(x - &factors.center)))
}

/// Scores for every row of `rows`, as an `n × k` matrix.
pub fn project_rows(factors: &EmpiricalFactors, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if rows.ncols() != factors.center.len() {
        return Err(Error::param("row width does not match factors"));
    }
    let mut z = rows.clone();
    for j in 0..rows.ncols() {
        let c = factors.center[j];
        z.column_mut(j).add_scalar_mut(-c);
    }
    Ok(z * &factors.projection)
}

/// Posterior coefficient draws `(intercept, slopes...)` of a probit fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbitFit {
    pub samples: Vec<DVector<f64>>,
    pub prior_scale: f64,
    pub n_burn: usize,
}

/// Probit regression of `labels` on factor scores.
///
/// The coefficient prior is a g-prior on the design `H = [1, scores]`,
/// `β ~ N(0, g (HᵀH)⁻¹)`, with a tiny ridge when `HᵀH` is singular. Scores are
/// internally oriented so that each column has nonnegative inner product with
/// the centered labels; draws are mapped back, which makes the fit exactly
/// equivariant to sign flips of score columns.
pub fn probit_mcmc(
    scores: &DMatrix<f64>,
    labels: &[bool],
    prior_scale: f64,
    n_burn: usize,
    n_keep: usize,
    rng: &mut RngState,
) -> Result<ProbitFit> {
    check_both_classes(labels)?;
    let (n, k) = scores.shape();
    if n < 2 || labels.len() != n {
        return Err(Error::data("need at least two scored rows, one label each"));
    }
    if !(prior_scale > 0.0) {
        return Err(Error::param("prior scale must be positive"));
    }
    let ybar = labels.iter().filter(|&&l| l).count() as f64 / n as f64;
    let signs: Vec<f64> = (0..k)
        .map(|j| {
            let s: f64 = (0..n).map(|i| scores[(i, j)] * (f64::from(u8::from(labels[i])) - ybar)).sum();
            let s = if s == 0.0 { scores.column(j).iter().copied().find(|v| *v != 0.0).unwrap_or(1.0) } else { s };
            if s < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let h = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { signs[j - 1] * scores[(i, j - 1)] });
    let gram = h.transpose() * &h;
    let ridge = 1e-8 * (gram.trace() / (k + 1) as f64).max(1.0);
    let precision = (gram + DMatrix::identity(k + 1, k + 1) * ridge) / prior_scale;
    let mut samples = probit_gibbs(&h, labels, &precision, n_burn, n_keep, rng)?;
    for b in samples.iter_mut() {
        for j in 0..k {
            b[j + 1] *= signs[j];
        }
    }
    Ok(ProbitFit { samples, prior_scale, n_burn })
}

/// `Pr(y = 1 | score)`, averaged over coefficient draws.
pub fn predict_probit(fit: &ProbitFit, score: &DVector<f64>) -> Result<f64> {
    let first = fit.samples.first().ok_or_else(|| Error::param("probit fit has no samples"))?;
    if first.len() != score.len() + 1 {
        return Err(Error::param("score dimension does not match the fit"));
    }
    let mut h = DVector::zeros(score.len() + 1);
    h[0] = 1.0;
    h.rows_mut(1, score.len()).copy_from(score);
    Ok(mean_probability(&fit.samples, &h))
}

/// Settings for the factor-probit classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorSettings {
    pub k: usize,
    pub prior_scale: f64,
    pub n_burn: usize,
    pub n_keep: usize,
}

impl Default for FactorSettings {
    fn default() -> Self {
        Self { k: 2, prior_scale: 10.0, n_burn: 500, n_keep: 1000 }
    }
}

/// Empirical factors plus a probit fit on their scores.
#[derive(Clone, Debug)]
pub struct FactorClassifier {
    pub factors: EmpiricalFactors,
    pub fit: ProbitFit,
}

impl FactorClassifier {
    /// Factors from `labeled ∪ unlabeled` rows; probit on labeled scores only.
    pub fn fit(
        labeled: &DMatrix<f64>,
        labels: &[bool],
        unlabeled: &DMatrix<f64>,
        settings: &FactorSettings,
        rng: &mut RngState,
    ) -> Result<Self> {
        if unlabeled.nrows() > 0 && unlabeled.ncols() != labeled.ncols() {
            return Err(Error::data("labeled and unlabeled rows differ in width"));
        }
        let pool = if unlabeled.nrows() == 0 {
            labeled.clone()
        } else {
            let mut pool = DMatrix::zeros(labeled.nrows() + unlabeled.nrows(), labeled.ncols());
            pool.rows_mut(0, labeled.nrows()).copy_from(labeled);
            pool.rows_mut(labeled.nrows(), unlabeled.nrows()).copy_from(unlabeled);
            pool
        };
        let k = settings.k.min(pool.nrows().min(pool.ncols()));
        let factors = compute_empirical_factors(&pool, k)?;
        let scores = project_rows(&factors, labeled)?;
        let fit = probit_mcmc(&scores, labels, settings.prior_scale, settings.n_burn, settings.n_keep, rng)?;
        Ok(Self { factors, fit })
    }

    pub fn predict(&self, x: &DVector<f64>) -> Result<f64> {
        predict_probit(&self.fit, &project(&self.factors, x)?)
    }
}

/// A labeled/unlabeled/test split for comparing factor classifiers.
#[derive(Clone, Debug)]
pub struct FactorTask {
    pub labeled: DMatrix<f64>,
    pub labels: Vec<bool>,
    pub unlabeled: DMatrix<f64>,
    pub test: DMatrix<f64>,
    pub test_labels: Vec<bool>,
}

/// Test errors of the labeled-only and the labeled+unlabeled classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorComparison {
    pub labeled_only: f64,
    pub semisupervised: f64,
}

impl FactorTask {
    /// Draws `per_class` labeled rows of each class from `pool`; the rest
    /// become unlabeled.
    pub fn from_pool(
        pool: &DMatrix<f64>,
        pool_labels: &[bool],
        per_class: usize,
        test: DMatrix<f64>,
        test_labels: Vec<bool>,
        rng: &mut RngState,
    ) -> Result<Self> {
        use rand::seq::SliceRandom;
        let mut chosen = Vec::with_capacity(2 * per_class);
        for class in [false, true] {
            let mut idx: Vec<usize> = (0..pool.nrows()).filter(|&i| pool_labels[i] == class).collect();
            if idx.len() < per_class {
                return Err(Error::data(format!("pool has fewer than {per_class} rows of one class")));
            }
            idx.shuffle(rng);
            chosen.extend_from_slice(&idx[..per_class]);
        }
        let rest: Vec<usize> = (0..pool.nrows()).filter(|i| !chosen.contains(i)).collect();
        Ok(Self {
            labeled: pool.select_rows(chosen.iter()),
            labels: chosen.iter().map(|&i| pool_labels[i]).collect(),
            unlabeled: pool.select_rows(rest.iter()),
            test,
            test_labels,
        })
    }

    /// Fraction of test rows whose true label gets predictive probability
    /// at most one half.
    pub fn error_rate(&self, classifier: &FactorClassifier) -> Result<f64> {
        let mut wrong = 0usize;
        for (i, &label) in self.test_labels.iter().enumerate() {
            let p = classifier.predict(&self.test.row(i).transpose())?;
            let p_true = if label { p } else { 1.0 - p };
            if p_true <= 0.5 {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / self.test_labels.len().max(1) as f64)
    }

    pub fn compare(&self, settings: &FactorSettings, rng: &mut RngState) -> Result<FactorComparison> {
        let none = DMatrix::zeros(0, self.labeled.ncols());
        let lab = FactorClassifier::fit(&self.labeled, &self.labels, &none, settings, rng)?;
        let semi = FactorClassifier::fit(&self.labeled, &self.labels, &self.unlabeled, settings, rng)?;
        Ok(FactorComparison { labeled_only: self.error_rate(&lab)?, semisupervised: self.error_rate(&semi)? })
    }
}

/// Synthetic stand-in for a high-dimensional two-class image problem.
///
/// `p = 1000` inputs driven by two latent factors with loadings of scale 0.15
/// and 0.05 over unit noise; the label is a probit in the first factor
/// (`α = (3, 0)`, `σ² = 0.1`). Per-coordinate signal is weak, so four labeled
/// rows cannot find the factor directions while a pool of 800 can.
pub fn synthetic_factor_model(rng: &mut RngState) -> FactorModel {
    let p = 1000;
    let loadings = DMatrix::from_fn(p, 2, |_, j| standard_normal(rng) * if j == 0 { 0.15 } else { 0.05 });
    FactorModel { loadings, psi: DVector::from_element(p, 1.0), alpha: DVector::from_vec(vec![3.0, 0.0]), sigma2: 0.1 }
}

/// Pool of `pool_size` rows with 2+2 labeled and `test_size` test rows.
pub fn synthetic_factor_task(pool_size: usize, test_size: usize, rng: &mut RngState) -> Result<FactorTask> {
    let model = synthetic_factor_model(rng);
    let pool = simulate_factor_data(&model, pool_size, true, rng)?;
    let test = simulate_factor_data(&model, test_size, true, rng)?;
    let labels: Vec<bool> = pool.y.iter().map(|&v| v > 0.5).collect();
    let test_labels = test.y.iter().map(|&v| v > 0.5).collect();
    FactorTask::from_pool(&pool.x, &labels, 2, test.x, test_labels, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_variance() {
        let mut rng = RngState::new(1);
        let rows = DMatrix::from_fn(2000, 2, |_, j| standard_normal(&mut rng) * if j == 0 { 2.0 } else { 1.0 });
        let f = compute_empirical_factors(&rows, 1).unwrap();
        assert!(f.projection[(0, 0)].abs() > 0.99);
    }

    #[test]
    fn sign_convention() {
        let mut rng = RngState::new(2);
        let rows = DMatrix::from_fn(30, 5, |_, _| standard_normal(&mut rng));
        let f = compute_empirical_factors(&rows, 3).unwrap();
        for c in f.projection.column_iter() {
            let lead = c.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn rank_deficient_request_shrinks() {
        let rows = DMatrix::from_fn(5, 4, |i, j| (i as f64) * (j as f64 + 1.0));
        let f = compute_empirical_factors(&rows, 3).unwrap();
        assert_eq!(f.k(), 1);
    }

    #[test]
    fn project_center_is_zero() {
        let mut rng = RngState::new(3);
        let rows = DMatrix::from_fn(10, 4, |_, _| standard_normal(&mut rng));
        let f = compute_empirical_factors(&rows, 2).unwrap();
        assert!(project(&f, &f.center).unwrap().norm() < 1e-14);
        let unit = &f.center + f.projection.column(1);
        let s = project(&f, &unit).unwrap();
        assert!((s[1] - 1.0).abs() < 1e-10 && s[0].abs() < 1e-10);
    }

    #[test]
    fn predict_limits() {
        let fit = ProbitFit { samples: vec![DVector::zeros(3); 4], prior_scale: 1.0, n_burn: 0 };
        assert_eq!(predict_probit(&fit, &DVector::from_vec(vec![1.0, -2.0])).unwrap(), 0.5);
        let fit = ProbitFit { samples: vec![DVector::from_vec(vec![10.0, 0.0]); 3], prior_scale: 1.0, n_burn: 0 };
        assert!(predict_probit(&fit, &DVector::from_vec(vec![5.0])).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn implied_marginal_zero_loadings() {
        let m = FactorModel::new(
            DMatrix::zeros(3, 1),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            DVector::from_vec(vec![1.0]),
            1.0,
        )
        .unwrap();
        assert_eq!(implied_x_marginal(&m).unwrap().matrix(), &DMatrix::from_diagonal(&m.psi));
    }
}
