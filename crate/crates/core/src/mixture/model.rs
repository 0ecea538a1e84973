use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::{
    centered_logpdf, permutation_independence_test, sample_dirichlet, sample_inverse_wishart, sample_mvn,
    IndependenceTest, IwConvention, RngState, SpdMatrix,
};

/// One multivariate normal component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mu: DVector<f64>,
    pub sigma: SpdMatrix,
}

impl GaussianComponent {
    pub fn new(mu: DVector<f64>, sigma: SpdMatrix) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(Error::param(format!("component mean dim {} != covariance dim {}", mu.len(), sigma.dim())));
        }
        Ok(Self { mu, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        centered_logpdf(&(x - &self.mu), &self.sigma)
    }
}

/// Regression of the first coordinate on the rest, derived from a joint normal.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalRegression {
    /// Normal marginal of the `x` block.
    pub marginal: GaussianComponent,
    pub beta: DVector<f64>,
    pub intercept: f64,
    /// Residual variance `τ²`.
    pub residual_var: f64,
}

impl ConditionalRegression {
    pub fn mean(&self, x: &DVector<f64>) -> f64 {
        self.intercept + self.beta.dot(x)
    }

    pub fn ln_pdf(&self, y: f64, x: &DVector<f64>) -> f64 {
        let r = y - self.mean(x);
        -0.5 * (crate::stochastics::special::LN_2PI + self.residual_var.ln() + r * r / self.residual_var)
    }
}

/// Splits a joint normal over `(y, x)` (y first) into the `x` marginal and
/// the conditional `y | x ~ N(intercept + βᵀx, τ²)` with `β = Σx⁻¹ρ` and
/// `τ² = σy² − βᵀρ`.
pub fn joint_to_conditional(component: &GaussianComponent) -> Result<ConditionalRegression> {
    let d = component.dim();
    if d < 2 {
        return Err(Error::param("joint component needs dim >= 2 (response plus covariates)"));
    }
    let s = component.sigma.matrix();
    let x_idx: Vec<usize> = (1..d).collect();
    let sigma_x = component.sigma.sub_block(&x_idx)?;
    let rho = DVector::from_fn(d - 1, |i, _| s[(i + 1, 0)]);
    let beta = sigma_x.solve(&rho);
    let residual_var = s[(0, 0)] - beta.dot(&rho);
    if !(residual_var > 0.0) {
        return Err(Error::NumericalFailure {
            message: "non-positive conditional variance".into(),
            diagnostics: vec![("tau2".into(), residual_var)],
        });
    }
    let mu_x = component.mu.rows(1, d - 1).into_owned();
    let intercept = component.mu[0] - beta.dot(&mu_x);
    Ok(ConditionalRegression {
        marginal: GaussianComponent { mu: mu_x, sigma: sigma_x },
        beta,
        intercept,
        residual_var,
    })
}

/// Distance-correlation permutation test between the regression parameters
/// `(β, τ²)` and the covariate parameters `(μx, Σx)` of components drawn from
/// the prior's normal–inverse-Wishart.
pub fn niw_phi_theta_independence_check(
    prior: &NiwMixturePrior,
    n_draws: usize,
    n_permutations: usize,
    rng: &mut RngState,
) -> Result<IndependenceTest> {
    prior.validate()?;
    if prior.dim() < 2 {
        return Err(Error::param("joint dimension must be at least 2"));
    }
    let mut phi = Vec::with_capacity(n_draws);
    let mut theta = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let c = joint_to_conditional(&prior.draw_component(rng)?)?;
        let mut p: Vec<f64> = c.beta.iter().copied().collect();
        p.push(c.residual_var);
        let mut t: Vec<f64> = c.marginal.mu.iter().copied().collect();
        let s = c.marginal.sigma.matrix();
        for j in 0..s.ncols() {
            t.extend((j..s.nrows()).map(|i| s[(i, j)]));
        }
        phi.push(p);
        theta.push(t);
    }
    permutation_independence_test(&phi, &theta, n_permutations, 250, 0.05, rng)
}

/// Mixture weights and components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    weights: Vec<f64>,
    components: Vec<GaussianComponent>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianComponent>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::param("need as many weights as components (m >= 1)"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::param("weights must be nonnegative and sum to 1"));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::param("all components must share a dimension"));
        }
        Ok(Self { weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Reorders components (and their weights) by `perm`: new slot `i` holds old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            components: perm.iter().map(|&i| self.components[i].clone()).collect(),
        }
    }
}

/// Conjugate prior for a finite Gaussian mixture:
/// `π ~ Dir(α)`, `μ_i | Σ_i ~ N(0, τ Σ_i)`, `Σ_i ~ IW(d, S0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiwMixturePrior {
    pub dirichlet_alpha: Vec<f64>,
    pub tau: f64,
    pub iw_dof: f64,
    pub iw_scale: SpdMatrix,
    #[serde(default)]
    pub iw_convention: IwConvention,
}

impl NiwMixturePrior {
    /// Three components, `Dir(1/3, 1/3, 1/3)`, `τ = 0.2`, `IW(3, (4/3) I)`.
    pub fn illustrative(dim: usize) -> Self {
        Self {
            dirichlet_alpha: vec![1.0 / 3.0; 3],
            tau: 0.2,
            iw_dof: 3.0,
            iw_scale: SpdMatrix::scaled_identity(dim, 4.0 / 3.0).expect("positive scale"),
            iw_convention: IwConvention::Standard,
        }
    }

    pub fn m(&self) -> usize {
        self.dirichlet_alpha.len()
    }

    pub fn dim(&self) -> usize {
        self.iw_scale.dim()
    }

    pub fn standard_dof(&self) -> f64 {
        self.iw_convention.standard_dof(self.iw_dof, self.dim())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dirichlet_alpha.is_empty() || self.dirichlet_alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::param("Dirichlet concentrations must be positive"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::param("tau must be positive"));
        }
        if !(self.standard_dof() > self.dim() as f64 - 1.0) {
            return Err(Error::param(format!("inverse-Wishart dof {} too small for dim {}", self.iw_dof, self.dim())));
        }
        Ok(())
    }

    pub fn draw_component(&self, rng: &mut RngState) -> Result<GaussianComponent> {
        self.posterior_component(&SuffStats::empty(self.dim()), rng)
    }

    pub fn draw_params(&self, rng: &mut RngState) -> Result<MixtureParams> {
        let weights = sample_dirichlet(&self.dirichlet_alpha, rng)?;
        let components = (0..self.m()).map(|_| self.draw_component(rng)).collect::<Result<Vec<_>>>()?;
        MixtureParams::new(weights, components)
    }

    /// Conjugate posterior hyperparameters `(μn, κn, νn, Sn)` given stats.
    pub fn posterior_hyper(&self, stats: &SuffStats) -> (DVector<f64>, f64, f64, DMatrix<f64>) {
        let kappa0 = 1.0 / self.tau;
        let n = stats.n as f64;
        let kappa_n = kappa0 + n;
        let mu_n = &stats.sum / kappa_n;
        let nu_n = self.standard_dof() + n;
        let s_n = self.iw_scale.matrix() + &stats.sum_sq - (&stats.sum * stats.sum.transpose()) / kappa_n;
        (mu_n, kappa_n, nu_n, s_n)
    }

    /// Draws `(μ, Σ)` from the normal–inverse-Wishart full conditional.
    /// With no points this is a prior draw.
    pub fn posterior_component(&self, stats: &SuffStats, rng: &mut RngState) -> Result<GaussianComponent> {
        let (mu_n, kappa_n, nu_n, s_n) = self.posterior_hyper(stats);
        let s_n = SpdMatrix::new(s_n)?;
        let sigma = sample_inverse_wishart(nu_n, &s_n, rng)?;
        let cov = SpdMatrix::new(sigma.matrix() / kappa_n)?;
        let mu = sample_mvn(&mu_n, &cov, rng)?;
        GaussianComponent::new(mu, sigma)
    }
}

/// Count, sum and sum of outer products of the points in one component.
#[derive(Clone, Debug)]
pub struct SuffStats {
    pub n: usize,
    pub sum: DVector<f64>,
    pub sum_sq: DMatrix<f64>,
}

impl SuffStats {
    pub fn empty(dim: usize) -> Self {
        Self { n: 0, sum: DVector::zeros(dim), sum_sq: DMatrix::zeros(dim, dim) }
    }

    pub fn push(&mut self, v: &DVector<f64>) {
        self.n += 1;
        self.sum += v;
        self.sum_sq.ger(1.0, v, v, 1.0);
    }
}

/// One labeled observation; `y` is a real response or a class label in {0, 1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub y: f64,
    pub x: DVector<f64>,
}

impl LabeledPoint {
    pub fn new(y: f64, x: Vec<f64>) -> Self {
        Self { y, x: DVector::from_vec(x) }
    }

    pub fn joint(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.x.len() + 1);
        v[0] = self.y;
        v.rows_mut(1, self.x.len()).copy_from(&self.x);
        v
    }
}

/// Labeled pairs plus unlabeled covariates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SemiSupDataset {
    pub labeled: Vec<LabeledPoint>,
    pub unlabeled_x: Vec<DVector<f64>>,
}

impl SemiSupDataset {
    pub fn new(labeled: Vec<LabeledPoint>, unlabeled_x: Vec<DVector<f64>>) -> Result<Self> {
        let ds = Self { labeled, unlabeled_x };
        ds.x_dim()?;
        Ok(ds)
    }

    /// Common covariate dimension (`None` when there is no data).
    pub fn x_dim(&self) -> Result<Option<usize>> {
        let mut dims = self.labeled.iter().map(|p| p.x.len()).chain(self.unlabeled_x.iter().map(|x| x.len()));
        let Some(first) = dims.next() else { return Ok(None) };
        if dims.any(|d| d != first) {
            return Err(Error::data("inconsistent covariate dimensions"));
        }
        Ok(Some(first))
    }

    pub fn labeled_only(&self) -> Self {
        Self { labeled: self.labeled.clone(), unlabeled_x: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labeled.len() + self.unlabeled_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Whether components live on the joint `(y, x)` space or on `x` with `y` as
/// the component label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixtureMode {
    Regression,
    Discriminant,
}
