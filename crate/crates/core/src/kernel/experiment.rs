use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::generate_two_cluster_2d;
use crate::error::{Error, Result};
use crate::stochastics::RngState;

use super::{median_bandwidth, rb_fit, Grid2d, KernelFit, RbSettings, RbfKernel};

/// Noise level of the 50-point two-cluster benchmark set.
pub const TWO_CLUSTER_NOISE: f64 = 0.1;
pub const TWO_CLUSTER_SIZE: usize = 50;

/// Points and binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoints {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl LabeledPoints {
    pub fn two_cluster(n: usize, noise: f64, rng: &mut RngState) -> Result<Self> {
        let data = generate_two_cluster_2d(n, noise, rng)?;
        let labels = data.labels.as_ref().map(|l| l.iter().map(|&v| v > 0.5).collect()).unwrap_or_default();
        let points = data.rows().into_iter().map(|r| r.iter().copied().collect()).collect();
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Picks `per_class` labeled points from each class at random.
    pub fn split(&self, per_class: usize, rng: &mut RngState) -> Result<Split> {
        let mut chosen = Vec::with_capacity(2 * per_class);
        for class in [false, true] {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            if idx.len() < per_class {
                return Err(Error::data(format!("fewer than {per_class} points in one class")));
            }
            idx.shuffle(rng);
            chosen.extend_from_slice(&idx[..per_class]);
        }
        let rest: Vec<usize> = (0..self.len()).filter(|i| !chosen.contains(i)).collect();
        Ok(Split {
            labeled: chosen.iter().map(|&i| (self.points[i].clone(), self.labels[i])).collect(),
            unlabeled: LabeledPoints {
                points: rest.iter().map(|&i| self.points[i].clone()).collect(),
                labels: rest.iter().map(|&i| self.labels[i]).collect(),
            },
        })
    }

    /// Fraction of points whose true label gets predictive probability at
    /// most one half.
    pub fn error_rate(&self, fit: &KernelFit) -> f64 {
        let wrong = self
            .points
            .iter()
            .zip(&self.labels)
            .filter(|(x, &y)| {
                let p = fit.probability(x);
                (if y { p } else { 1.0 - p }) <= 0.5
            })
            .count();
        wrong as f64 / self.len().max(1) as f64
    }
}

/// Labeled pairs plus the held-back points, whose labels are used only for
/// scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub labeled: Vec<(Vec<f64>, bool)>,
    pub unlabeled: LabeledPoints,
}

/// [`rb_fit`] with the median-distance bandwidth over every available input.
pub fn rb_fit_default_bandwidth(
    labeled: &[(Vec<f64>, bool)],
    unlabeled: &[Vec<f64>],
    settings: &RbSettings,
    rng: &mut RngState,
) -> Result<KernelFit> {
    let all: Vec<Vec<f64>> = labeled.iter().map(|p| p.0.clone()).chain(unlabeled.iter().cloned()).collect();
    let kernel = RbfKernel::new(median_bandwidth(&all)?)?;
    rb_fit(labeled, unlabeled, &kernel, settings, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelComparison {
    pub labeled_only: f64,
    pub semisupervised: f64,
}

/// Error on the held-back points with and without them as base points.
pub fn compare_on_split(split: &Split, settings: &RbSettings, rng: &mut RngState) -> Result<KernelComparison> {
    let lab = rb_fit_default_bandwidth(&split.labeled, &[], settings, rng)?;
    let semi = rb_fit_default_bandwidth(&split.labeled, &split.unlabeled.points, settings, rng)?;
    Ok(KernelComparison {
        labeled_only: split.unlabeled.error_rate(&lab),
        semisupervised: split.unlabeled.error_rate(&semi),
    })
}

/// Lattice covering the points with a margin of 0.5 on every side.
pub fn covering_grid(points: &[Vec<f64>], n: usize) -> Result<Grid2d> {
    let bound = |d: usize| {
        points.iter().map(|p| p[d]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x, y) = (bound(0), bound(1));
    Grid2d::new((x.0 - 0.5, x.1 + 0.5), n, (y.0 - 0.5, y.1 + 0.5), n)
}

/// Pearson correlation of two fits' probabilities over the lattice nodes.
pub fn field_correlation(a: &KernelFit, b: &KernelFit, grid: &Grid2d) -> f64 {
    let nodes = grid.nodes();
    let pa: Vec<f64> = nodes.iter().map(|n| a.probability(n)).collect();
    let pb: Vec<f64> = nodes.iter().map(|n| b.probability(n)).collect();
    pearson(&pa, &pb)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
