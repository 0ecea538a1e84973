use nalgebra::DVector;
use rand::Rng;

use super::model::{
    joint_to_conditional, ConditionalRegression, GaussianComponent, MixtureMode, MixtureParams, NiwMixturePrior,
    SemiSupDataset, SuffStats,
};
use crate::error::{Error, Result};
use crate::stochastics::special::softmax;
use crate::stochastics::{sample_dirichlet, standard_normal, RngState};

/// Chain state: parameters, one allocation per observation (labeled first,
/// then unlabeled) and, in regression mode, imputed responses for the
/// unlabeled covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsState {
    pub params: MixtureParams,
    pub allocations: Vec<usize>,
    pub imputed_y: Option<Vec<f64>>,
}

/// Burn-in, retained draws and thinning for a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct McmcSettings {
    pub burn: usize,
    pub keep: usize,
    pub thin: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { burn: 2000, keep: 2000, thin: 2 }
    }
}

impl McmcSettings {
    pub fn new(burn: usize, keep: usize, thin: usize) -> Self {
        Self { burn, keep, thin }
    }
}

fn sample_categorical(probs: &[f64], rng: &mut RngState) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

fn check_inputs(data: &SemiSupDataset, prior: &NiwMixturePrior, mode: MixtureMode) -> Result<()> {
    prior.validate()?;
    if let Some(p) = data.x_dim()? {
        let want = match mode {
            MixtureMode::Regression => p + 1,
            MixtureMode::Discriminant => p,
        };
        if want != prior.dim() {
            return Err(Error::param(format!("prior scale has dim {} but data needs {want}", prior.dim())));
        }
    }
    if mode == MixtureMode::Discriminant {
        if prior.m() != 2 {
            return Err(Error::param("discriminant mode needs exactly two components"));
        }
        if data.labeled.iter().any(|p| p.y != 0.0 && p.y != 1.0) {
            return Err(Error::data("discriminant labels must be 0 or 1"));
        }
    }
    Ok(())
}

/// One full sweep of the semisupervised mixture Gibbs sampler.
///
/// Order: (a) reallocate labeled points by joint density and unlabeled
/// covariates by marginal density, (b) impute missing responses from the
/// allocated component's conditional (regression mode), (c) redraw weights
/// from the Dirichlet full conditional, (d) redraw every component from its
/// normal–inverse-Wishart full conditional. Empty components get a prior draw.
pub fn gibbs_step(
    state: &GibbsState,
    data: &SemiSupDataset,
    prior: &NiwMixturePrior,
    mode: MixtureMode,
    rng: &mut RngState,
) -> Result<GibbsState> {
    let n_lab = data.labeled.len();
    if state.allocations.len() != data.len() {
        return Err(Error::data("state allocations do not match data size"));
    }
    let m = state.params.m();
    let ln_w: Vec<f64> = state.params.weights().iter().map(|w| w.ln()).collect();
    let comps = state.params.components();
    let mut allocations = Vec::with_capacity(data.len());
    let mut imputed = Vec::new();
    let mut logp = vec![0.0; m];

    match mode {
        MixtureMode::Regression => {
            let conds = comps.iter().map(joint_to_conditional).collect::<Result<Vec<ConditionalRegression>>>()?;
            for p in &data.labeled {
                let z = p.joint();
                for k in 0..m {
                    logp[k] = ln_w[k] + comps[k].ln_pdf(&z);
                }
                allocations.push(sample_categorical(&softmax(&logp), rng));
            }
            for x in &data.unlabeled_x {
                for k in 0..m {
                    logp[k] = ln_w[k] + conds[k].marginal.ln_pdf(x);
                }
                let k = sample_categorical(&softmax(&logp), rng);
                allocations.push(k);
                let c = &conds[k];
                imputed.push(c.mean(x) + c.residual_var.sqrt() * standard_normal(rng));
            }
        }
        MixtureMode::Discriminant => {
            allocations.extend(data.labeled.iter().map(|p| p.y as usize));
            for x in &data.unlabeled_x {
                for k in 0..m {
                    logp[k] = ln_w[k] + comps[k].ln_pdf(x);
                }
                allocations.push(sample_categorical(&softmax(&logp), rng));
            }
        }
    }

    let imputed_y = (mode == MixtureMode::Regression).then_some(imputed);
    let params = draw_params_given(data, prior, mode, &allocations, imputed_y.as_deref(), rng)?;
    debug_assert_eq!(allocations.len(), n_lab + data.unlabeled_x.len());
    Ok(GibbsState { params, allocations, imputed_y })
}

/// Steps (c) and (d): weights and components given allocations.
fn draw_params_given(
    data: &SemiSupDataset,
    prior: &NiwMixturePrior,
    mode: MixtureMode,
    allocations: &[usize],
    imputed_y: Option<&[f64]>,
    rng: &mut RngState,
) -> Result<MixtureParams> {
    let m = prior.m();
    let mut stats = vec![SuffStats::empty(prior.dim()); m];
    let n_lab = data.labeled.len();
    for (i, p) in data.labeled.iter().enumerate() {
        let v = match mode {
            MixtureMode::Regression => p.joint(),
            MixtureMode::Discriminant => p.x.clone(),
        };
        stats[allocations[i]].push(&v);
    }
    for (j, x) in data.unlabeled_x.iter().enumerate() {
        let k = allocations[n_lab + j];
        match (mode, imputed_y) {
            (MixtureMode::Regression, Some(ys)) => {
                let mut v = DVector::zeros(x.len() + 1);
                v[0] = ys[j];
                v.rows_mut(1, x.len()).copy_from(x);
                stats[k].push(&v);
            }
            _ => stats[k].push(x),
        }
    }
    let alpha: Vec<f64> = prior.dirichlet_alpha.iter().zip(&stats).map(|(a, s)| a + s.n as f64).collect();
    let weights = sample_dirichlet(&alpha, rng)?;
    let components =
        stats.iter().map(|s| prior.posterior_component(s, rng)).collect::<Result<Vec<GaussianComponent>>>()?;
    MixtureParams::new(weights, components)
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm_squared()
}

fn nearest(x: &DVector<f64>, centers: &[DVector<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// k-means++ seeding followed by a few Lloyd iterations.
fn kmeans(points: &[&DVector<f64>], m: usize, rng: &mut RngState) -> Vec<DVector<f64>> {
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(m);
    centers.push(points[rng.random_range(0..points.len())].clone());
    while centers.len() < m {
        let d2: Vec<f64> =
            points.iter().map(|p| centers.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            centers.push(centers[0].clone());
            continue;
        }
        let probs: Vec<f64> = d2.iter().map(|d| d / total).collect();
        centers.push(points[sample_categorical(&probs, rng)].clone());
    }
    for _ in 0..10 {
        let mut sums = vec![DVector::zeros(points[0].len()); m];
        let mut counts = vec![0usize; m];
        for p in points {
            let k = nearest(p, &centers);
            sums[k] += *p;
            counts[k] += 1;
        }
        for k in 0..m {
            if counts[k] > 0 {
                centers[k] = &sums[k] / counts[k] as f64;
            }
        }
    }
    centers
}

/// Starting state: nearest-center allocations after k-means seeding on the
/// covariates, cluster-mean imputation for missing responses, then parameters
/// drawn from their full conditionals.
pub fn initial_state(
    data: &SemiSupDataset,
    prior: &NiwMixturePrior,
    mode: MixtureMode,
    rng: &mut RngState,
) -> Result<GibbsState> {
    check_inputs(data, prior, mode)?;
    let m = prior.m();
    if data.is_empty() {
        return Ok(GibbsState {
            params: prior.draw_params(rng)?,
            allocations: Vec::new(),
            imputed_y: (mode == MixtureMode::Regression).then(Vec::new),
        });
    }
    let n_lab = data.labeled.len();
    let xs: Vec<&DVector<f64>> = data.labeled.iter().map(|p| &p.x).chain(data.unlabeled_x.iter()).collect();
    let (allocations, imputed_y) = match mode {
        MixtureMode::Regression => {
            let centers = kmeans(&xs, m, rng);
            let alloc: Vec<usize> = xs.iter().map(|x| nearest(x, &centers)).collect();
            let overall = if n_lab > 0 { data.labeled.iter().map(|p| p.y).sum::<f64>() / n_lab as f64 } else { 0.0 };
            let mut ysum = vec![0.0; m];
            let mut ycount = vec![0usize; m];
            for (i, p) in data.labeled.iter().enumerate() {
                ysum[alloc[i]] += p.y;
                ycount[alloc[i]] += 1;
            }
            let imputed = (0..data.unlabeled_x.len())
                .map(|j| {
                    let k = alloc[n_lab + j];
                    if ycount[k] > 0 {
                        ysum[k] / ycount[k] as f64
                    } else {
                        overall
                    }
                })
                .collect();
            (alloc, Some(imputed))
        }
        MixtureMode::Discriminant => {
            let mut centers = Vec::with_capacity(2);
            for class in 0..2 {
                let members: Vec<&DVector<f64>> =
                    data.labeled.iter().filter(|p| p.y as usize == class).map(|p| &p.x).collect();
                if members.is_empty() {
                    centers.push(xs[rng.random_range(0..xs.len())].clone());
                } else {
                    let sum = members.iter().fold(DVector::zeros(members[0].len()), |acc, x| acc + *x);
                    centers.push(sum / members.len() as f64);
                }
            }
            let mut alloc: Vec<usize> = data.labeled.iter().map(|p| p.y as usize).collect();
            alloc.extend(data.unlabeled_x.iter().map(|x| nearest(x, &centers)));
            (alloc, None)
        }
    };
    let params = draw_params_given(data, prior, mode, &allocations, imputed_y.as_deref(), rng)?;
    Ok(GibbsState { params, allocations, imputed_y })
}

/// Runs a chain and returns the retained parameter draws.
pub fn fit_mixture(
    data: &SemiSupDataset,
    prior: &NiwMixturePrior,
    mode: MixtureMode,
    settings: McmcSettings,
    rng: &mut RngState,
) -> Result<Vec<MixtureParams>> {
    if settings.keep == 0 || settings.thin == 0 {
        return Err(Error::param("need keep >= 1 and thin >= 1"));
    }
    let mut state = initial_state(data, prior, mode, rng)?;
    for _ in 0..settings.burn {
        state = gibbs_step(&state, data, prior, mode, rng)?;
    }
    let mut samples = Vec::with_capacity(settings.keep);
    while samples.len() < settings.keep {
        for _ in 0..settings.thin {
            state = gibbs_step(&state, data, prior, mode, rng)?;
        }
        samples.push(state.params.clone());
    }
    Ok(samples)
}
