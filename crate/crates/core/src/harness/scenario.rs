use std::path::{Path, PathBuf};

use log::info;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binary::posterior_predictive;
use crate::data::{generate_mixture_scene, load_digit_pair, write_results, Cell, Interval, ResultTable};
use crate::error::{Error, Result};
use crate::factor::{synthetic_factor_task, FactorComparison, FactorTask};
use crate::kernel::{
    compare_on_split, covering_grid, decision_contour, field_correlation, rb_fit_default_bandwidth, rb_predict,
    KernelFit, LabeledPoints,
};
use crate::mixture::{fit_mixture, predictive_regression_curve, MixtureMode};
use crate::relevance::{unlabeled_relevant, verdict_catalogue, RelevanceVerdict, SpecFile};
use crate::stochastics::RngState;

use super::config::{DigitsScenario, ExperimentConfig, KernelScenario, MixtureScenario, ScenarioId};
use super::sweep::{run_sweep, sweep_table, KernelSweepModel};

/// Files written by a scenario run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Everything needed to rerun a scenario and get the same bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: ScenarioId,
    pub seed: u64,
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

/// Seed stream of replicate `r` in a scenario.
pub fn scenario_rng(seed: u64, replicate: usize) -> RngState {
    RngState::new(seed).child(replicate as u64)
}

/// Predictive regression curves from the complete data, the labeled subset,
/// and the labeled subset plus the unlabeled `x` values.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureCurves {
    pub grid: Vec<f64>,
    pub full: Vec<f64>,
    pub labeled_only: Vec<f64>,
    pub semisupervised: Vec<f64>,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
}

impl MixtureCurves {
    fn msd(&self, curve: &[f64]) -> f64 {
        curve.iter().zip(&self.full).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / self.grid.len() as f64
    }

    /// Mean squared deviation of the labeled-only curve from the full curve.
    pub fn msd_labeled_only(&self) -> f64 {
        self.msd(&self.labeled_only)
    }

    pub fn msd_semisupervised(&self) -> f64 {
        self.msd(&self.semisupervised)
    }
}

pub fn mixture_replicate(cfg: &MixtureScenario, rng: &mut RngState) -> Result<MixtureCurves> {
    if cfg.grid_points < 2 {
        return Err(Error::Config("mixture grid needs at least 2 points".into()));
    }
    let step = (cfg.grid_hi - cfg.grid_lo) / (cfg.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..cfg.grid_points).map(|i| cfg.grid_lo + step * i as f64).collect();
    let xs: Vec<DVector<f64>> = grid.iter().map(|&x| DVector::from_vec(vec![x])).collect();
    let scene =
        generate_mixture_scene(&cfg.prior, cfg.prior.m(), cfg.n, Interval::new(cfg.labeled_lo, cfg.labeled_hi), rng)?;
    let mut curve = |data: &crate::mixture::SemiSupDataset| -> Result<Vec<f64>> {
        let samples = fit_mixture(data, &cfg.prior, MixtureMode::Regression, cfg.mcmc, rng)?;
        predictive_regression_curve(&samples, &xs)
    };
    let full = curve(&scene.full_data())?;
    let labeled_only = curve(&scene.dataset.labeled_only())?;
    let semisupervised = curve(&scene.dataset)?;
    Ok(MixtureCurves {
        grid,
        full,
        labeled_only,
        semisupervised,
        n_labeled: scene.dataset.labeled.len(),
        n_unlabeled: scene.dataset.unlabeled_x.len(),
    })
}

/// Pool, labeled draw and test rows for one digits replicate.
pub fn digits_replicate(cfg: &DigitsScenario, source: &DigitsSource, rng: &mut RngState) -> Result<FactorComparison> {
    let task = match source {
        DigitsSource::Synthetic => synthetic_factor_task(2 * cfg.pool_per_class, cfg.synthetic_test_size, rng)?,
        DigitsSource::Images { pool, pool_labels, test, test_labels } => {
            FactorTask::from_pool(pool, pool_labels, cfg.labeled_per_class, test.clone(), test_labels.clone(), rng)?
        }
    };
    task.compare(&cfg.factor, rng)
}

pub enum DigitsSource {
    Synthetic,
    Images { pool: DMatrix<f64>, pool_labels: Vec<bool>, test: DMatrix<f64>, test_labels: Vec<bool> },
}

impl DigitsSource {
    /// The first `pool_per_class` images of each digit form the pool; the
    /// next `test_per_class` (or all the rest) are the test set.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let cfg = &config.digits;
        if cfg.synthetic {
            return Ok(Self::Synthetic);
        }
        let images = config
            .inputs
            .idx_images
            .as_ref()
            .ok_or_else(|| Error::MissingInput { what: "IDX image file".into(), flag: "--idx-images".into() })?;
        let labels = config
            .inputs
            .idx_labels
            .as_ref()
            .ok_or_else(|| Error::MissingInput { what: "IDX label file".into(), flag: "--idx-labels".into() })?;
        for (path, flag) in [(images, "--idx-images"), (labels, "--idx-labels")] {
            if !path.exists() {
                return Err(Error::MissingInput {
                    what: format!("{} does not exist", path.display()),
                    flag: flag.into(),
                });
            }
        }
        let pair = load_digit_pair(images, labels, cfg.first_digit, cfg.second_digit)?;
        let k = cfg.pool_per_class;
        if pair.first.len() <= k || pair.second.len() <= k {
            return Err(Error::data(format!("need more than {k} images of each digit")));
        }
        let take = |v: &[Vec<f64>], lo: usize, hi: usize| v[lo..hi.min(v.len())].to_vec();
        let test_hi = |len: usize| cfg.test_per_class.map_or(len, |t| k + t);
        let stack = |a: Vec<Vec<f64>>, b: Vec<Vec<f64>>| {
            let labels: Vec<bool> =
                std::iter::repeat_n(false, a.len()).chain(std::iter::repeat_n(true, b.len())).collect();
            let rows: Vec<Vec<f64>> = a.into_iter().chain(b).collect();
            (DMatrix::from_fn(rows.len(), pair.pixels, |i, j| rows[i][j]), labels)
        };
        let (pool, pool_labels) = stack(take(&pair.first, 0, k), take(&pair.second, 0, k));
        let (test, test_labels) =
            stack(take(&pair.first, k, test_hi(pair.first.len())), take(&pair.second, k, test_hi(pair.second.len())));
        Ok(Self::Images { pool, pool_labels, test, test_labels })
    }
}

/// Runs a scenario and writes its CSV tables plus `manifest.json` into `out`.
pub fn run_scenario(config: &ExperimentConfig, out: &Path) -> Result<ScenarioOutput> {
    config.validate()?;
    let tables = match config.scenario {
        ScenarioId::MixtureFig1 => mixture_tables(config)?,
        ScenarioId::Digits6v9 => digits_tables(config)?,
        ScenarioId::KernelSynthetic => kernel_tables(config)?,
        ScenarioId::BinaryCell => binary_tables(config)?,
        ScenarioId::Relevance => relevance_tables(config)?,
    };
    let mut files = Vec::with_capacity(tables.len());
    for (name, table) in &tables {
        let path = out.join(name);
        write_results(table, &path)?;
        files.push(path);
    }
    let manifest = Manifest {
        tool: "semisup".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: config.scenario,
        seed: config.seed,
        files: tables.iter().map(|(n, _)| n.clone()).collect(),
        config: config.clone(),
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(ScenarioOutput { files, manifest: path })
}

type Tables = Vec<(String, ResultTable)>;

fn mixture_tables(config: &ExperimentConfig) -> Result<Tables> {
    let names = ["full", "labeled_only", "semisupervised"];
    let mut curves: Vec<ResultTable> =
        names.iter().map(|_| ResultTable::new(["replicate", "x", "predictive_mean"])).collect();
    let mut summary =
        ResultTable::new(["replicate", "n_labeled", "n_unlabeled", "msd_labeled_only", "msd_semisupervised", "ratio"]);
    for rep in 0..config.replicates {
        let c = mixture_replicate(&config.mixture, &mut scenario_rng(config.seed, rep))?;
        for (table, values) in curves.iter_mut().zip([&c.full, &c.labeled_only, &c.semisupervised]) {
            for (x, y) in c.grid.iter().zip(values) {
                table.push(vec![rep.into(), (*x).into(), (*y).into()])?;
            }
        }
        let (ml, ms) = (c.msd_labeled_only(), c.msd_semisupervised());
        info!("mixture replicate {rep}: msd labeled-only {ml:.4}, semisupervised {ms:.4}");
        summary.push(vec![
            rep.into(),
            c.n_labeled.into(),
            c.n_unlabeled.into(),
            ml.into(),
            ms.into(),
            (ms / ml).into(),
        ])?;
    }
    let mut out: Tables = names.iter().zip(curves).map(|(n, t)| (format!("mixture_curve_{n}.csv"), t)).collect();
    out.push(("mixture_summary.csv".into(), summary));
    Ok(out)
}

fn digits_tables(config: &ExperimentConfig) -> Result<Tables> {
    let source = DigitsSource::load(config)?;
    let mut table = ResultTable::new(["replicate", "error_labeled_only", "error_semisupervised"]);
    for rep in 0..config.replicates {
        let c = digits_replicate(&config.digits, &source, &mut scenario_rng(config.seed, rep))?;
        table.push(vec![rep.into(), c.labeled_only.into(), c.semisupervised.into()])?;
    }
    Ok(vec![("digits_errors.csv".into(), table)])
}

fn kernel_data(cfg: &KernelScenario, seed: u64) -> Result<LabeledPoints> {
    LabeledPoints::two_cluster(cfg.n_points, cfg.noise, &mut RngState::new(seed))
}

/// Mean errors over `replicates` random splits with `per_class` labels each.
pub fn kernel_error_replicates(config: &ExperimentConfig, per_class: usize) -> Result<Vec<(f64, f64)>> {
    let data = kernel_data(&config.kernel, config.seed)?;
    (0..config.replicates)
        .map(|rep| {
            let mut rng = scenario_rng(config.seed, rep);
            let split = data.split(per_class, &mut rng)?;
            let c = compare_on_split(&split, &config.kernel.settings, &mut rng)?;
            Ok((c.labeled_only, c.semisupervised))
        })
        .collect()
}

/// Correlation of semisupervised fields with `per_class` labels each against
/// the fully labeled field, one value per split.
pub fn kernel_field_correlations(config: &ExperimentConfig, per_class: usize, splits: usize) -> Result<Vec<f64>> {
    let data = kernel_data(&config.kernel, config.seed)?;
    let grid = covering_grid(&data.points, config.kernel.grid_size)?;
    let full = full_label_fit(&data, config)?;
    (0..splits)
        .map(|rep| {
            let mut rng = scenario_rng(config.seed, rep).child(1);
            let split = data.split(per_class, &mut rng)?;
            let fit =
                rb_fit_default_bandwidth(&split.labeled, &split.unlabeled.points, &config.kernel.settings, &mut rng)?;
            Ok(field_correlation(&full, &fit, &grid))
        })
        .collect()
}

fn full_label_fit(data: &LabeledPoints, config: &ExperimentConfig) -> Result<KernelFit> {
    let labeled: Vec<(Vec<f64>, bool)> = data.points.iter().cloned().zip(data.labels.iter().copied()).collect();
    rb_fit_default_bandwidth(&labeled, &[], &config.kernel.settings, &mut RngState::new(config.seed).child(u64::MAX))
}

fn kernel_tables(config: &ExperimentConfig) -> Result<Tables> {
    let cfg = &config.kernel;
    let data = kernel_data(cfg, config.seed)?;
    let per_class = config.labeled_count.map_or(2, |c| (c / 2).max(1));
    let mut out = Tables::new();

    let mut points = ResultTable::new(["x1", "x2", "label"]);
    for (p, &l) in data.points.iter().zip(&data.labels) {
        points.push(vec![p[0].into(), p[1].into(), usize::from(l).into()])?;
    }
    out.push(("kernel_points.csv".into(), points));

    let mut errors = ResultTable::new(["replicate", "error_labeled_only", "error_semisupervised"]);
    for (rep, (l, s)) in kernel_error_replicates(config, per_class)?.into_iter().enumerate() {
        errors.push(vec![rep.into(), l.into(), s.into()])?;
    }
    out.push(("kernel_errors.csv".into(), errors));

    let grid = covering_grid(&data.points, cfg.grid_size)?;
    let full = full_label_fit(&data, config)?;
    let mut rng = scenario_rng(config.seed, 0).child(2);
    let split = data.split(per_class, &mut rng)?;
    let lab = rb_fit_default_bandwidth(&split.labeled, &[], &cfg.settings, &mut rng)?;
    let semi = rb_fit_default_bandwidth(&split.labeled, &split.unlabeled.points, &cfg.settings, &mut rng)?;
    let mut field = ResultTable::new([
        "x1",
        "x2",
        "p_full",
        "p_labeled_only",
        "p_semisupervised",
        "semisupervised_lo",
        "semisupervised_hi",
    ]);
    for [x, y] in grid.nodes() {
        let (ps, [lo, hi]) = rb_predict(&semi, &[x, y])?;
        field.push(vec![
            x.into(),
            y.into(),
            full.probability(&[x, y]).into(),
            lab.probability(&[x, y]).into(),
            ps.into(),
            lo.into(),
            hi.into(),
        ])?;
    }
    out.push(("kernel_grid.csv".into(), field));
    let mut contours = ResultTable::new(["fit", "x1", "x2"]);
    for (name, fit) in [("full", &full), ("labeled-only", &lab), ("semisupervised", &semi)] {
        for [x, y] in decision_contour(fit, &grid)? {
            contours.push(vec![Cell::from(name), x.into(), y.into()])?;
        }
    }
    out.push(("kernel_contours.csv".into(), contours));

    let mut wide = ResultTable::new(["split", "labeled_per_class", "field_correlation"]);
    for (i, r) in kernel_field_correlations(config, cfg.wide_labeled_per_class, config.replicates.min(10))?
        .into_iter()
        .enumerate()
    {
        wide.push(vec![i.into(), cfg.wide_labeled_per_class.into(), r.into()])?;
    }
    out.push(("kernel_field_correlation.csv".into(), wide));

    if cfg.sweep {
        let cells = run_sweep(config, &data, &KernelSweepModel(cfg.settings))?;
        out.push(("kernel_sweep.csv".into(), sweep_table(&cells)));
    }
    Ok(out)
}

fn binary_tables(config: &ExperimentConfig) -> Result<Tables> {
    let cfg = &config.binary;
    let mut t = ResultTable::new([
        "x_star",
        "p_labeled_only",
        "method_labeled_only",
        "p_with_unlabeled",
        "method_with_unlabeled",
    ]);
    for x in [0u8, 1] {
        let a = posterior_predictive(&cfg.prior, &cfg.data.without_unlabeled(), x)?;
        let b = posterior_predictive(&cfg.prior, &cfg.data, x)?;
        let name = |m| serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        t.push(vec![
            usize::from(x).into(),
            a.probability.into(),
            name(a.method).into(),
            b.probability.into(),
            name(b.method).into(),
        ])?;
    }
    Ok(vec![("binary_cell.csv".into(), t)])
}

fn verdict_row(name: &str, expected: Option<bool>, v: &RelevanceVerdict) -> Vec<Cell> {
    let expected = expected.map_or(String::new(), |e| if e { "relevant".into() } else { "irrelevant".into() });
    vec![name.into(), expected.into(), v.label().into(), v.conditioning.join(" ").into(), v.explanation().into()]
}

fn relevance_tables(config: &ExperimentConfig) -> Result<Tables> {
    let mut t = ResultTable::new(["case", "expected", "verdict", "conditioning", "explanation"]);
    match &config.relevance.spec_file {
        Some(path) => {
            let spec = SpecFile::read(path)?.build()?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            t.push(verdict_row(&name, None, &unlabeled_relevant(&spec)?))?;
        }
        None => {
            for case in verdict_catalogue() {
                t.push(verdict_row(case.name, Some(case.expected_relevant), &unlabeled_relevant(&case.spec()?)?))?;
            }
        }
    }
    Ok(vec![("relevance_verdicts.csv".into(), t)])
}
