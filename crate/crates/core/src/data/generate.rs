use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{LabeledPoint, MixtureParams, NiwMixturePrior, SemiSupDataset};
use crate::stochastics::{sample_mvn, standard_normal, RngState};

/// Closed interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn everything() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn empty() -> Self {
        Self { lo: 1.0, hi: 0.0 }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Synthetic mixture data with the parameters that generated it.
#[derive(Clone, Debug)]
pub struct MixtureScene {
    pub params: MixtureParams,
    /// Every simulated point with its response, in draw order.
    pub complete: Vec<LabeledPoint>,
    /// Component that generated each point.
    pub components: Vec<usize>,
    pub dataset: SemiSupDataset,
}

impl MixtureScene {
    pub fn full_data(&self) -> SemiSupDataset {
        SemiSupDataset { labeled: self.complete.clone(), unlabeled_x: Vec::new() }
    }
}

/// Draws mixture parameters from `prior`, then `n` joint observations `(y, x)`.
/// A point keeps its response only when every coordinate of `x` lies in
/// `labeled_x_range`.
pub fn generate_mixture_scene(
    prior: &NiwMixturePrior,
    m: usize,
    n: usize,
    labeled_x_range: Interval,
    rng: &mut RngState,
) -> Result<MixtureScene> {
    if n == 0 {
        return Err(Error::param("scene needs n >= 1"));
    }
    if prior.m() != m {
        return Err(Error::param(format!("prior has {} components but m = {m}", prior.m())));
    }
    if prior.dim() < 2 {
        return Err(Error::param("joint dimension must be at least 2"));
    }
    let params = prior.draw_params(rng)?;
    let mut complete = Vec::with_capacity(n);
    let mut components = Vec::with_capacity(n);
    let mut labeled = Vec::new();
    let mut unlabeled_x = Vec::new();
    for _ in 0..n {
        let k = draw_index(params.weights(), rng);
        let comp = &params.components()[k];
        let z = sample_mvn(&comp.mu, &comp.sigma, rng)?;
        let x = z.rows(1, z.len() - 1).into_owned();
        let point = LabeledPoint { y: z[0], x: x.clone() };
        if x.iter().all(|&v| labeled_x_range.contains(v)) {
            labeled.push(point.clone());
        } else {
            unlabeled_x.push(x);
        }
        complete.push(point);
        components.push(k);
    }
    Ok(MixtureScene { params, complete, components, dataset: SemiSupDataset { labeled, unlabeled_x } })
}

fn draw_index(weights: &[f64], rng: &mut RngState) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Feature rows with optional labels and an optional labeled mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub features: DMatrix<f64>,
    pub labels: Option<Vec<f64>>,
    pub labeled_mask: Option<Vec<bool>>,
}

impl TabularDataset {
    pub fn new(features: DMatrix<f64>, labels: Option<Vec<f64>>, labeled_mask: Option<Vec<bool>>) -> Result<Self> {
        let n = features.nrows();
        if labels.as_ref().is_some_and(|l| l.len() != n) {
            return Err(Error::data("label column length differs from row count"));
        }
        if labeled_mask.as_ref().is_some_and(|m| m.len() != n) {
            return Err(Error::data("mask length differs from row count"));
        }
        Ok(Self { features, labels, labeled_mask })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::data("ragged feature rows"));
        }
        let features = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(features, labels, None)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    pub fn rows(&self) -> Vec<DVector<f64>> {
        (0..self.len()).map(|i| self.row(i)).collect()
    }
}

/// Two interleaved half-moons in the plane, `n / 2` points per class.
///
/// Class 0 follows `(cos t, sin t)` and class 1 follows `(1 - cos t, 0.5 - sin t)`
/// with `t ~ U[0, pi]`; both receive isotropic Gaussian noise of standard
/// deviation `noise`. Rows alternate between classes (class 0 first).
pub fn generate_two_cluster_2d(n: usize, noise: f64, rng: &mut RngState) -> Result<TabularDataset> {
    if n < 2 {
        return Err(Error::param("two-cluster data needs n >= 2"));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::param("noise must be a finite non-negative value"));
    }
    let mut features = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let t = PI * rng.random::<f64>();
        let (a, b) = if class == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
        features[(i, 0)] = a + noise * standard_normal(rng);
        features[(i, 1)] = b + noise * standard_normal(rng);
        labels.push(class as f64);
    }
    TabularDataset::new(features, Some(labels), None)
}
