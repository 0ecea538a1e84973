use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::ResultTable;
use crate::error::Result;
use crate::factor::{FactorClassifier, FactorSettings};
use crate::kernel::{rb_fit_default_bandwidth, LabeledPoints, RbSettings};
use crate::stochastics::RngState;

use super::config::ExperimentConfig;

/// Which side of a comparison a fit belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    LabeledOnly,
    Semisupervised,
}

/// Inputs handed to a model for one fit. The labeled-only arm always gets an
/// empty `unlabeled` slice.
pub struct FitRequest<'a> {
    pub arm: Arm,
    pub labeled: &'a [(Vec<f64>, bool)],
    pub unlabeled: &'a [Vec<f64>],
    pub eval: &'a [Vec<f64>],
}

/// A binary classifier that can be fitted with or without unlabeled inputs.
pub trait SweepModel {
    /// `Pr(y = 1)` at every evaluation point.
    fn fit_predict(&self, request: &FitRequest<'_>, rng: &mut RngState) -> Result<Vec<f64>>;
}

/// Bayesian kernel probit with the median-distance bandwidth.
pub struct KernelSweepModel(pub RbSettings);

impl SweepModel for KernelSweepModel {
    fn fit_predict(&self, r: &FitRequest<'_>, rng: &mut RngState) -> Result<Vec<f64>> {
        let fit = rb_fit_default_bandwidth(r.labeled, r.unlabeled, &self.0, rng)?;
        Ok(r.eval.iter().map(|x| fit.probability(x)).collect())
    }
}

/// Empirical factors plus probit.
pub struct FactorSweepModel(pub FactorSettings);

impl SweepModel for FactorSweepModel {
    fn fit_predict(&self, r: &FitRequest<'_>, rng: &mut RngState) -> Result<Vec<f64>> {
        let p = r.labeled.first().map_or(0, |l| l.0.len());
        let rows = |pts: &mut dyn Iterator<Item = &Vec<f64>>| {
            let v: Vec<&Vec<f64>> = pts.collect();
            nalgebra::DMatrix::from_fn(v.len(), p, |i, j| v[i][j])
        };
        let labeled = rows(&mut r.labeled.iter().map(|l| &l.0));
        let unlabeled = rows(&mut r.unlabeled.iter());
        let labels: Vec<bool> = r.labeled.iter().map(|l| l.1).collect();
        let c = FactorClassifier::fit(&labeled, &labels, &unlabeled, &self.0, rng)?;
        r.eval.iter().map(|x| c.predict(&nalgebra::DVector::from_column_slice(x))).collect()
    }
}

/// Error convention shared by every scenario: the true label's predictive
/// probability at or below one half is a mistake.
pub fn misclassified(p_one: f64, label: bool) -> bool {
    (if label { p_one } else { 1.0 - p_one }) <= 0.5
}

pub fn error_rate(probs: &[f64], labels: &[bool]) -> f64 {
    let wrong = probs.iter().zip(labels).filter(|(p, l)| misclassified(**p, **l)).count();
    wrong as f64 / labels.len().max(1) as f64
}

/// Mean errors for one labeled fraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub labeled_fraction: f64,
    pub n_labeled: usize,
    pub completed: usize,
    pub failures: usize,
    pub error_labeled_only: f64,
    pub error_semisupervised: f64,
}

/// Replicate `r` of fraction `f` uses `child(f).child(r)` of the master
/// seed's stream.
pub fn replicate_rng(seed: u64, fraction_index: usize, replicate: usize) -> RngState {
    RngState::new(seed).child(fraction_index as u64).child(replicate as u64)
}

/// For each labeled fraction and replicate: draw a random labeled subset,
/// fit both arms from the same generator state and score each on the
/// remaining points (on the labeled points when nothing remains).
pub fn run_sweep(config: &ExperimentConfig, data: &LabeledPoints, model: &dyn SweepModel) -> Result<Vec<SweepCell>> {
    config.validate()?;
    let n = data.len();
    let counts: Vec<(f64, usize)> = match config.labeled_count {
        Some(c) => vec![(c as f64 / n as f64, c.min(n))],
        None => config.labeled_fractions.iter().map(|&f| (f, ((f * n as f64).round() as usize).clamp(1, n))).collect(),
    };
    let mut cells = Vec::with_capacity(counts.len());
    for (fi, &(fraction, n_labeled)) in counts.iter().enumerate() {
        let (mut sum_l, mut sum_s, mut done, mut failed) = (0.0, 0.0, 0usize, 0usize);
        for rep in 0..config.replicates {
            let mut rng = replicate_rng(config.seed, fi, rep);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let labeled: Vec<(Vec<f64>, bool)> =
                idx[..n_labeled].iter().map(|&i| (data.points[i].clone(), data.labels[i])).collect();
            let rest = &idx[n_labeled..];
            let unlabeled: Vec<Vec<f64>> = rest.iter().map(|&i| data.points[i].clone()).collect();
            let (eval, truth): (Vec<Vec<f64>>, Vec<bool>) = if rest.is_empty() {
                labeled.iter().cloned().unzip()
            } else {
                (unlabeled.clone(), rest.iter().map(|&i| data.labels[i]).collect())
            };
            let mut rng_semi = rng.clone();
            let lab = model.fit_predict(
                &FitRequest { arm: Arm::LabeledOnly, labeled: &labeled, unlabeled: &[], eval: &eval },
                &mut rng,
            );
            let semi = model.fit_predict(
                &FitRequest { arm: Arm::Semisupervised, labeled: &labeled, unlabeled: &unlabeled, eval: &eval },
                &mut rng_semi,
            );
            match (lab, semi) {
                (Ok(pl), Ok(ps)) => {
                    sum_l += error_rate(&pl, &truth);
                    sum_s += error_rate(&ps, &truth);
                    done += 1;
                }
                (a, b) => {
                    let e = a.err().or(b.err()).map(|e| e.to_string()).unwrap_or_default();
                    warn!("fraction {fraction}, replicate {rep}: fit failed: {e}");
                    failed += 1;
                }
            }
        }
        let mean = |s: f64| if done > 0 { s / done as f64 } else { f64::NAN };
        cells.push(SweepCell {
            labeled_fraction: fraction,
            n_labeled,
            completed: done,
            failures: failed,
            error_labeled_only: mean(sum_l),
            error_semisupervised: mean(sum_s),
        });
    }
    Ok(cells)
}

pub fn sweep_table(cells: &[SweepCell]) -> ResultTable {
    let mut t = ResultTable::new([
        "labeled_fraction",
        "unlabeled_fraction",
        "n_labeled",
        "completed",
        "failures",
        "error_labeled_only",
        "error_semisupervised",
    ]);
    let mut sorted = cells.to_vec();
    sorted.sort_by(|a, b| a.labeled_fraction.total_cmp(&b.labeled_fraction));
    for c in sorted {
        t.push(vec![
            c.labeled_fraction.into(),
            (1.0 - c.labeled_fraction).into(),
            c.n_labeled.into(),
            c.completed.into(),
            c.failures.into(),
            c.error_labeled_only.into(),
            c.error_semisupervised.into(),
        ])
        .expect("row width matches header");
    }
    t
}
