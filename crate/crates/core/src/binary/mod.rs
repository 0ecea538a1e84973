//! Binary covariate, binary response prediction.
//!
//! Cell probabilities `π_xy = Pr(x, y)` are reparameterized as
//! `θ = Pr(x = 1) = π10 + π11`, `ϕ1 = π11 / θ` and `ϕ0 = π01 / (1 − θ)`.
//! Prediction targets `p* = Pr(y* = 1 | x*, D) = E(ϕ_{x*} | D)`, where `D`
//! holds labeled cell counts and unlabeled covariate counts.

use gauss_quad::GaussLegendre;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::special::{beta_ln_pdf, ln_choose, ln_gamma, log_sum_exp};
use crate::stochastics::{permutation_independence_test, sample_beta, sample_dirichlet, IndependenceTest, RngState};

/// Mixture size up to which the unlabeled likelihood is expanded exactly.
pub const EXPANSION_CAP: u64 = 64;

const QUAD_TOL: f64 = 1e-6;
const QUAD_MAX_PANELS: usize = 4096;

/// Prior on the four cell probabilities, ordered `(π00, π01, π10, π11)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CellPrior {
    /// Independent `ϕ0 ~ Beta`, `ϕ1 ~ Beta`, `θ ~ Beta`, each as `[a, b]`.
    ProductBeta {
        phi0: [f64; 2],
        phi1: [f64; 2],
        theta: [f64; 2],
    },
    Dirichlet {
        alpha: [f64; 4],
    },
    /// `a · Dir(dir0) + (1 − a) · Dir(dir1)`.
    DirichletMixture {
        a: f64,
        dir0: [f64; 4],
        dir1: [f64; 4],
    },
}

/// Labeled counts `n[x][y]` and unlabeled counts `m[x]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountData {
    pub labeled: [[u64; 2]; 2],
    pub unlabeled: [u64; 2],
}

impl CountData {
    pub fn new(labeled: [[u64; 2]; 2], unlabeled: [u64; 2]) -> Self {
        Self { labeled, unlabeled }
    }

    /// Counts in `(π00, π01, π10, π11)` order.
    fn cells(&self) -> [f64; 4] {
        let n = &self.labeled;
        [n[0][0] as f64, n[0][1] as f64, n[1][0] as f64, n[1][1] as f64]
    }

    pub fn without_unlabeled(&self) -> Self {
        Self { labeled: self.labeled, unlabeled: [0, 0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictiveMethod {
    ClosedForm,
    Expansion,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPrediction {
    pub probability: f64,
    pub method: PredictiveMethod,
}

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::param(format!("{what} parameters must be positive and finite")));
    }
    Ok(())
}

impl CellPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            CellPrior::ProductBeta { phi0, phi1, theta } => {
                check_positive(phi0, "phi0")?;
                check_positive(phi1, "phi1")?;
                check_positive(theta, "theta")
            }
            CellPrior::Dirichlet { alpha } => check_positive(alpha, "Dirichlet"),
            CellPrior::DirichletMixture { a, dir0, dir1 } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(Error::param("mixture weight a must lie in (0, 1)"));
                }
                check_positive(dir0, "dir0")?;
                check_positive(dir1, "dir1")
            }
        }
    }

    /// One prior draw of `(π00, π01, π10, π11)`.
    pub fn sample_cells(&self, rng: &mut RngState) -> Result<[f64; 4]> {
        let from_parts = |phi0: f64, phi1: f64, theta: f64| {
            [(1.0 - theta) * (1.0 - phi0), (1.0 - theta) * phi0, theta * (1.0 - phi1), theta * phi1]
        };
        let dir = |alpha: &[f64; 4], rng: &mut RngState| -> Result<[f64; 4]> {
            let v = sample_dirichlet(alpha, rng)?;
            Ok([v[0], v[1], v[2], v[3]])
        };
        match self {
            CellPrior::ProductBeta { phi0, phi1, theta } => {
                let p0 = sample_beta(phi0[0], phi0[1], rng)?;
                let p1 = sample_beta(phi1[0], phi1[1], rng)?;
                let t = sample_beta(theta[0], theta[1], rng)?;
                Ok(from_parts(p0, p1, t))
            }
            CellPrior::Dirichlet { alpha } => dir(alpha, rng),
            CellPrior::DirichletMixture { a, dir0, dir1 } => {
                if rng.random::<f64>() < *a {
                    dir(dir0, rng)
                } else {
                    dir(dir1, rng)
                }
            }
        }
    }
}

/// `(ϕ0, ϕ1, θ)` from cell probabilities.
pub fn cells_to_phi_theta(pi: &[f64; 4]) -> (f64, f64, f64) {
    let theta = pi[2] + pi[3];
    (pi[1] / (pi[0] + pi[1]), pi[3] / theta, theta)
}

/// Posterior mean of `ϕ_x` under one Dirichlet with updated counts.
fn dirichlet_phi_mean(alpha: &[f64; 4], x_star: usize) -> f64 {
    let (fail, succ) = if x_star == 1 { (alpha[2], alpha[3]) } else { (alpha[0], alpha[1]) };
    succ / (succ + fail)
}

fn check_x(x_star: u8) -> Result<usize> {
    match x_star {
        0 | 1 => Ok(x_star as usize),
        _ => Err(Error::param("x* must be 0 or 1")),
    }
}

/// `p* = Pr(y* = 1 | x*, D)`, with the method used.
///
/// Product-Beta and single-Dirichlet priors have closed forms in which the
/// unlabeled counts cancel. For a Dirichlet mixture the unlabeled factor
/// `θ^{m1} (1 − θ)^{m0}` is expanded binomially into a mixture of Dirichlet
/// kernels when `m0 + m1 ≤ EXPANSION_CAP`; larger counts use quadrature.
pub fn posterior_predictive(prior: &CellPrior, data: &CountData, x_star: u8) -> Result<CellPrediction> {
    prior.validate()?;
    let x = check_x(x_star)?;
    let n = &data.labeled;
    match prior {
        CellPrior::ProductBeta { phi0, phi1, .. } => {
            let ab = if x == 1 { phi1 } else { phi0 };
            let (fail, succ) = (n[x][0] as f64, n[x][1] as f64);
            Ok(CellPrediction {
                probability: (ab[0] + succ) / (ab[0] + ab[1] + succ + fail),
                method: PredictiveMethod::ClosedForm,
            })
        }
        CellPrior::Dirichlet { alpha } => {
            let c = data.cells();
            let post = [alpha[0] + c[0], alpha[1] + c[1], alpha[2] + c[2], alpha[3] + c[3]];
            Ok(CellPrediction { probability: dirichlet_phi_mean(&post, x), method: PredictiveMethod::ClosedForm })
        }
        CellPrior::DirichletMixture { .. } => {
            if data.unlabeled[0] + data.unlabeled[1] <= EXPANSION_CAP {
                Ok(CellPrediction {
                    probability: mixture_by_expansion(prior, data, x)?,
                    method: PredictiveMethod::Expansion,
                })
            } else {
                Ok(CellPrediction {
                    probability: mixture_by_quadrature(prior, data, x)?,
                    method: PredictiveMethod::Quadrature,
                })
            }
        }
    }
}

fn mixture_parts(prior: &CellPrior) -> Result<(f64, [f64; 4], [f64; 4])> {
    match prior {
        CellPrior::DirichletMixture { a, dir0, dir1 } => Ok((*a, *dir0, *dir1)),
        _ => Err(Error::param("expected a Dirichlet mixture prior")),
    }
}

fn ln_multi_beta(alpha: &[f64; 4]) -> f64 {
    alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha.iter().sum())
}

/// Exact `p*` for a Dirichlet mixture by binomial expansion.
///
/// `(π10 + π11)^{m1} (π00 + π01)^{m0}` becomes a sum of monomials, so the
/// posterior is a finite mixture of Dirichlets, each contributing its own
/// posterior mean of `ϕ_{x*}`.
pub fn mixture_by_expansion(prior: &CellPrior, data: &CountData, x_star: usize) -> Result<f64> {
    let (a, dir0, dir1) = mixture_parts(prior)?;
    let [m0, m1] = data.unlabeled;
    if (m0 + 1).saturating_mul(m1 + 1) > 1_000_000 {
        return Err(Error::param("too many unlabeled counts for exact expansion"));
    }
    let c = data.cells();
    let mut ln_w = Vec::new();
    let mut means = Vec::new();
    for (ln_prior_w, dir) in [(a.ln(), dir0), ((1.0 - a).ln(), dir1)] {
        let base = ln_multi_beta(&dir);
        for k1 in 0..=m1 {
            for k0 in 0..=m0 {
                let post = [
                    dir[0] + c[0] + k0 as f64,
                    dir[1] + c[1] + (m0 - k0) as f64,
                    dir[2] + c[2] + k1 as f64,
                    dir[3] + c[3] + (m1 - k1) as f64,
                ];
                ln_w.push(ln_prior_w + ln_choose(m0, k0) + ln_choose(m1, k1) + ln_multi_beta(&post) - base);
                means.push(dirichlet_phi_mean(&post, x_star));
            }
        }
    }
    let lse = log_sum_exp(&ln_w);
    Ok(ln_w.iter().zip(&means).map(|(l, m)| (l - lse).exp() * m).sum())
}

/// Composite Gauss–Legendre rule on `(0, 1)` after the substitution
/// `u = (1 − cos πt) / 2`, which tames endpoint singularities of Beta kernels.
/// Returns `(u, ln weight)` pairs including the Jacobian.
fn unit_rule(panels: usize, base: &GaussLegendre) -> Vec<(f64, f64)> {
    let h = 1.0 / panels as f64;
    let mut out = Vec::with_capacity(panels * base.degree());
    for p in 0..panels {
        for (node, weight) in base.iter() {
            let t = h * (p as f64 + 0.5 * (node + 1.0));
            let u = 0.5 * (1.0 - (std::f64::consts::PI * t).cos());
            let jac = 0.5 * std::f64::consts::PI * (std::f64::consts::PI * t).sin();
            if u > 0.0 && u < 1.0 && jac > 0.0 {
                out.push((u, (0.5 * h * weight * jac).ln()));
            }
        }
    }
    out
}

/// `ln ∫ f(u) du` and `ln ∫ u f(u) du` for `ln f` given pointwise.
fn integrate_ln(rule: &[(f64, f64)], ln_f: impl Fn(f64) -> f64) -> (f64, f64) {
    let terms: Vec<f64> = rule.iter().map(|&(u, lw)| lw + ln_f(u)).collect();
    let first: Vec<f64> = rule.iter().zip(&terms).map(|(&(u, _), t)| t + u.ln()).collect();
    (log_sum_exp(&terms), log_sum_exp(&first))
}

/// `p*` for a Dirichlet mixture by tensor-product quadrature over
/// `(θ, ϕ0, ϕ1) ∈ (0, 1)³`.
///
/// Under each Dirichlet component the prior density in these coordinates is a
/// product of three Beta densities, and the likelihood factorizes the same
/// way, so the three-dimensional tensor rule is evaluated as a product of
/// one-dimensional sums. Panels double until `p*` changes by less than 1e-6
/// relative.
pub fn mixture_by_quadrature(prior: &CellPrior, data: &CountData, x_star: usize) -> Result<f64> {
    let (a, dir0, dir1) = mixture_parts(prior)?;
    let c = data.cells();
    let [m0, m1] = [data.unlabeled[0] as f64, data.unlabeled[1] as f64];
    let base = GaussLegendre::new(16.try_into().expect("nonzero degree"));
    let estimate = |panels: usize| -> f64 {
        let rule = unit_rule(panels, &base);
        let mut ln_num = Vec::new();
        let mut ln_den = Vec::new();
        for (ln_pw, d) in [(a.ln(), dir0), ((1.0 - a).ln(), dir1)] {
            let (lt, _) = integrate_ln(&rule, |t| {
                beta_ln_pdf(t, d[2] + d[3], d[0] + d[1])
                    + (c[2] + c[3] + m1) * t.ln()
                    + (c[0] + c[1] + m0) * (1.0 - t).ln()
            });
            let (l0, l0u) = integrate_ln(&rule, |p| beta_ln_pdf(p, d[1], d[0]) + c[1] * p.ln() + c[0] * (1.0 - p).ln());
            let (l1, l1u) = integrate_ln(&rule, |p| beta_ln_pdf(p, d[3], d[2]) + c[3] * p.ln() + c[2] * (1.0 - p).ln());
            let common = ln_pw + lt;
            ln_den.push(common + l0 + l1);
            ln_num.push(common + if x_star == 1 { l0 + l1u } else { l0u + l1 });
        }
        (log_sum_exp(&ln_num) - log_sum_exp(&ln_den)).exp()
    };
    let mut panels = 4;
    let mut prev = estimate(panels);
    let mut change = f64::INFINITY;
    while panels < QUAD_MAX_PANELS {
        panels *= 2;
        let next = estimate(panels);
        change = ((next - prev) / next).abs();
        prev = next;
        if change < QUAD_TOL && panels >= 16 {
            return Ok(next);
        }
    }
    Err(Error::NumericalFailure {
        message: "simplex quadrature did not converge".into(),
        diagnostics: vec![
            ("panels".into(), panels as f64),
            ("relative_change".into(), change),
            ("estimate".into(), prev),
        ],
    })
}

/// Mixing weight on the first component given `θ`:
/// `w(θ) / (1 − w(θ)) = [a / (1 − a)] · p0(θ) / p1(θ)`, where `p_j` is the
/// Beta marginal of `θ = π10 + π11` under component `j`.
pub fn conditional_prior_weight(prior: &CellPrior, theta: f64) -> Result<f64> {
    let (a, dir0, dir1) = mixture_parts(prior)?;
    prior.validate()?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param(format!("theta must lie strictly inside (0, 1), got {theta}")));
    }
    let l0 = a.ln() + beta_ln_pdf(theta, dir0[2] + dir0[3], dir0[0] + dir0[1]);
    let l1 = (1.0 - a).ln() + beta_ln_pdf(theta, dir1[2] + dir1[3], dir1[0] + dir1[1]);
    Ok((l0 - log_sum_exp(&[l0, l1])).exp())
}

/// Distance-correlation permutation test between `θ` and `(ϕ0, ϕ1)` drawn
/// from `prior`.
pub fn phi_theta_independence_check(
    prior: &CellPrior,
    n_draws: usize,
    n_permutations: usize,
    rng: &mut RngState,
) -> Result<IndependenceTest> {
    prior.validate()?;
    if n_draws < 10_000 {
        return Err(Error::param("independence check needs at least 10^4 draws"));
    }
    let mut theta = Vec::with_capacity(n_draws);
    let mut phi = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let (p0, p1, t) = cells_to_phi_theta(&prior.sample_cells(rng)?);
        theta.push(vec![t]);
        phi.push(vec![p0, p1]);
    }
    permutation_independence_test(&theta, &phi, n_permutations, 250, 0.05, rng)
}

/// [`phi_theta_independence_check`] for a single Dirichlet prior.
pub fn dirichlet_phi_theta_independence_check(
    alpha: [f64; 4],
    n_draws: usize,
    rng: &mut RngState,
) -> Result<IndependenceTest> {
    phi_theta_independence_check(&CellPrior::Dirichlet { alpha }, n_draws, 199, rng)
}

/// Prior mean of `ϕ_{x*}`.
pub fn prior_phi_mean(prior: &CellPrior, x_star: u8) -> Result<f64> {
    posterior_predictive(prior, &CountData::default(), x_star).map(|p| p.probability)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_beta_example() {
        let prior = CellPrior::ProductBeta { phi0: [1.0, 1.0], phi1: [1.0, 1.0], theta: [1.0, 1.0] };
        let data = CountData::new([[0, 0], [1, 3]], [0, 0]);
        let p = posterior_predictive(&prior, &data, 1).unwrap();
        assert!((p.probability - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.method, PredictiveMethod::ClosedForm);
        let more = CountData::new([[0, 0], [1, 3]], [7, 2]);
        assert_eq!(posterior_predictive(&prior, &more, 1).unwrap(), p);
    }

    #[test]
    fn no_data_gives_prior_mean() {
        let prior = CellPrior::DirichletMixture { a: 0.3, dir0: [1.0, 2.0, 3.0, 4.0], dir1: [2.0, 1.0, 1.0, 2.0] };
        let got = posterior_predictive(&prior, &CountData::default(), 1).unwrap().probability;
        let want = 0.3 * 4.0 / 7.0 + 0.7 * 2.0 / 3.0;
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn equal_components_ignore_unlabeled() {
        let d = [1.5, 2.0, 0.7, 3.0];
        let prior = CellPrior::DirichletMixture { a: 0.4, dir0: d, dir1: d };
        let data = CountData::new([[2, 1], [4, 5]], [9, 13]);
        let with = posterior_predictive(&prior, &data, 1).unwrap().probability;
        let without = posterior_predictive(&prior, &data.without_unlabeled(), 1).unwrap().probability;
        assert!((with - without).abs() < 1e-12);
    }

    #[test]
    fn expansion_and_quadrature_agree() {
        let prior = CellPrior::DirichletMixture { a: 0.5, dir0: [4.0, 1.0, 1.0, 4.0], dir1: [1.0, 4.0, 4.0, 1.0] };
        for (data, x) in [
            (CountData::new([[3, 1], [2, 4]], [5, 11]), 1),
            (CountData::new([[0, 0], [1, 0]], [20, 3]), 0),
            (CountData::new([[10, 2], [0, 7]], [0, 40]), 1),
        ] {
            let e = mixture_by_expansion(&prior, &data, x).unwrap();
            let q = mixture_by_quadrature(&prior, &data, x).unwrap();
            assert!((e - q).abs() < 1e-6, "{e} vs {q}");
        }
    }

    #[test]
    fn weight_limits() {
        let p = CellPrior::DirichletMixture { a: 0.3, dir0: [1.0; 4], dir1: [1.0; 4] };
        assert!((conditional_prior_weight(&p, 0.8).unwrap() - 0.3).abs() < 1e-14);
        assert!(conditional_prior_weight(&p, 0.0).is_err());
        assert!(conditional_prior_weight(&p, 1.0).is_err());
        let tiny = CellPrior::DirichletMixture { a: 1e-12, dir0: [1.0; 4], dir1: [2.0; 4] };
        assert!(conditional_prior_weight(&tiny, 0.4).unwrap() < 1e-10);
    }

    #[test]
    fn rejects_bad_priors() {
        assert!(CellPrior::Dirichlet { alpha: [1.0, 0.0, 1.0, 1.0] }.validate().is_err());
        assert!(CellPrior::DirichletMixture { a: 1.0, dir0: [1.0; 4], dir1: [1.0; 4] }.validate().is_err());
        let prior = CellPrior::Dirichlet { alpha: [1.0; 4] };
        assert!(posterior_predictive(&prior, &CountData::default(), 2).is_err());
    }
}
