use nalgebra::DVector;

use super::model::{joint_to_conditional, ConditionalRegression, MixtureParams};
use crate::error::{Error, Result};
use crate::stochastics::special::log_sum_exp;

/// `ln π_i + ln f_i(x)` per component; `x` may cover the whole component or
/// only its covariate block (all coordinates after the first).
fn marginal_log_terms(params: &MixtureParams, x: &DVector<f64>) -> Result<Vec<f64>> {
    let d = params.dim();
    params
        .weights()
        .iter()
        .zip(params.components())
        .map(|(w, c)| {
            let lf = if x.len() == d {
                c.ln_pdf(x)
            } else if x.len() + 1 == d {
                joint_to_conditional(c)?.marginal.ln_pdf(x)
            } else {
                return Err(Error::param(format!("x has dim {} but components have dim {d}", x.len())));
            };
            Ok(w.ln() + lf)
        })
        .collect()
}

/// `w_i(x) = π_i f_i(x) / Σ_j π_j f_j(x)`, computed in log-space.
pub fn conditional_mixture_weights(params: &MixtureParams, x: &DVector<f64>) -> Result<Vec<f64>> {
    Ok(crate::stochastics::special::softmax(&marginal_log_terms(params, x)?))
}

/// Per-sample regression pieces, computed once per sample.
struct PreparedSample {
    ln_weights: Vec<f64>,
    conds: Vec<ConditionalRegression>,
}

impl PreparedSample {
    fn new(params: &MixtureParams) -> Result<Self> {
        if params.dim() < 2 {
            return Err(Error::param("regression needs joint components of dim >= 2"));
        }
        Ok(Self {
            ln_weights: params.weights().iter().map(|w| w.ln()).collect(),
            conds: params.components().iter().map(joint_to_conditional).collect::<Result<Vec<_>>>()?,
        })
    }

    /// `(ln π_i f_i(x), i)` sorted into a canonical order so that reductions do
    /// not depend on component labelling.
    fn ordered_terms(&self, x: &DVector<f64>) -> Vec<(f64, usize)> {
        let mut terms: Vec<(f64, usize)> = self
            .ln_weights
            .iter()
            .zip(&self.conds)
            .enumerate()
            .map(|(i, (lw, c))| (lw + c.marginal.ln_pdf(x), i))
            .collect();
        terms.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| self.conds[a.1].mean(x).total_cmp(&self.conds[b.1].mean(x)))
                .then_with(|| self.conds[a.1].residual_var.total_cmp(&self.conds[b.1].residual_var))
        });
        terms
    }

    fn regression_mean(&self, x: &DVector<f64>) -> f64 {
        let terms = self.ordered_terms(x);
        let logs: Vec<f64> = terms.iter().map(|t| t.0).collect();
        let lse = log_sum_exp(&logs);
        if !lse.is_finite() {
            let n = terms.len() as f64;
            return terms.iter().map(|&(_, i)| self.conds[i].mean(x)).sum::<f64>() / n;
        }
        terms.iter().map(|&(l, i)| (l - lse).exp() * self.conds[i].mean(x)).sum()
    }

    fn density(&self, x: &DVector<f64>, y: f64) -> f64 {
        let terms = self.ordered_terms(x);
        let logs: Vec<f64> = terms.iter().map(|t| t.0).collect();
        let lse = log_sum_exp(&logs);
        let joint: Vec<f64> = terms.iter().map(|&(l, i)| l + self.conds[i].ln_pdf(y, x)).collect();
        if !lse.is_finite() {
            return 0.0;
        }
        (log_sum_exp(&joint) - lse).exp()
    }
}

fn check_samples(samples: &[MixtureParams]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::param("posterior sample set is empty"));
    }
    Ok(())
}

/// Posterior mean regression function `E(y* | x*, D)` at each grid point,
/// averaged analytically over parameter draws.
pub fn predictive_regression_curve(samples: &[MixtureParams], x_grid: &[DVector<f64>]) -> Result<Vec<f64>> {
    check_samples(samples)?;
    let prepared = samples.iter().map(PreparedSample::new).collect::<Result<Vec<_>>>()?;
    let n = prepared.len() as f64;
    Ok(x_grid.iter().map(|x| prepared.iter().map(|p| p.regression_mean(x)).sum::<f64>() / n).collect())
}

/// Posterior predictive density `p(y | x*, D)` on `y_grid`.
pub fn predictive_density(samples: &[MixtureParams], x_star: &DVector<f64>, y_grid: &[f64]) -> Result<Vec<f64>> {
    check_samples(samples)?;
    let prepared = samples.iter().map(PreparedSample::new).collect::<Result<Vec<_>>>()?;
    let n = prepared.len() as f64;
    Ok(y_grid.iter().map(|&y| prepared.iter().map(|p| p.density(x_star, y)).sum::<f64>() / n).collect())
}

/// `Pr(y* = 1 | x*, D)` for two-class discriminant samples (component 1 is class 1).
pub fn classify(samples: &[MixtureParams], x_star: &DVector<f64>) -> Result<f64> {
    check_samples(samples)?;
    let mut total = 0.0;
    for s in samples {
        if s.m() != 2 {
            return Err(Error::param("classification needs two-component samples"));
        }
        let w = conditional_mixture_weights(s, x_star)?;
        total += w[1];
    }
    Ok(total / samples.len() as f64)
}
