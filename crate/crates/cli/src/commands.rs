use std::path::{Path, PathBuf};

use log::{info, warn};
use semisup_core::data::{generate_mixture_scene, generate_two_cluster_2d, write_results, Cell, Interval, ResultTable};
use semisup_core::factor::{simulate_factor_data, synthetic_factor_model, synthetic_factor_task, FactorClassifier};
use semisup_core::harness::{
    run_scenario, run_sweep, sweep_table, DigitsSource, ExperimentConfig, FactorSweepModel, KernelSweepModel,
    ScenarioId,
};
use semisup_core::kernel::{
    covering_grid, decision_contour, laprls_fit, median_bandwidth, rb_fit, rb_predict, KernelFit, LabeledPoints,
    LaplacianConfig, RbfKernel,
};
use semisup_core::mixture::{
    self, predictive_regression_curve, LabeledPoint, MixtureMode, NiwMixturePrior, SemiSupDataset,
};
use semisup_core::nalgebra::{DMatrix, DVector};
use semisup_core::relevance::{unlabeled_relevant, verdict_catalogue, SpecFile};
use semisup_core::{Error, Result, RngState};

use crate::input::{read_inputs, read_split};
use crate::{
    BinaryCellArgs, FitFactorArgs, FitKernelArgs, FitMixtureArgs, GlobalOpts, KernelModeArg, RelevanceArgs,
    ScenarioArgs, SimKind, SimulateArgs, SweepArgs,
};

fn load_config(g: &GlobalOpts, default: ScenarioId) -> Result<ExperimentConfig> {
    let mut config = match &g.config {
        Some(path) => ExperimentConfig::read(path)?,
        None => ExperimentConfig::for_scenario(default),
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(r) = g.replicates {
        config.replicates = r;
    }
    if let Some(p) = &g.idx_images {
        config.inputs.idx_images = Some(p.clone());
    }
    if let Some(p) = &g.idx_labels {
        config.inputs.idx_labels = Some(p.clone());
    }
    if let Some(out) = &g.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, table: &ResultTable) -> Result<()> {
    let path = dir.join(name);
    write_results(table, &path)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn blank() -> Cell {
    Cell::Text(String::new())
}

pub fn simulate(g: &GlobalOpts, a: &SimulateArgs) -> Result<()> {
    let config = load_config(g, ScenarioId::KernelSynthetic)?;
    let dir = out_dir(&config)?;
    let mut rng = RngState::new(config.seed);
    match a.kind {
        SimKind::Mixture => {
            let cfg = &config.mixture;
            let scene = generate_mixture_scene(
                &cfg.prior,
                cfg.prior.m(),
                a.n,
                Interval::new(cfg.labeled_lo, cfg.labeled_hi),
                &mut rng,
            )?;
            let p = cfg.prior.dim() - 1;
            let mut t = ResultTable::new(std::iter::once("y".to_string()).chain((1..=p).map(|j| format!("x{j}"))));
            let range = Interval::new(cfg.labeled_lo, cfg.labeled_hi);
            for point in &scene.complete {
                let y = if point.x.iter().all(|&v| range.contains(v)) { point.y.into() } else { blank() };
                t.push(std::iter::once(y).chain(point.x.iter().map(|&v| v.into())).collect())?;
            }
            write(&dir, "simulated_mixture.csv", &t)
        }
        SimKind::TwoCluster => {
            let data = generate_two_cluster_2d(a.n, a.noise, &mut rng)?;
            let labels = data.labels.clone().unwrap_or_default();
            let keep: Option<Vec<bool>> = config.labeled_count.map(|c| {
                let split = LabeledPoints {
                    points: data.rows().iter().map(|r| r.iter().copied().collect()).collect(),
                    labels: labels.iter().map(|&l| l == 1.0).collect(),
                };
                let chosen = split.split((c / 2).max(1), &mut rng).map(|s| s.labeled).unwrap_or_default();
                split.points.iter().map(|p| chosen.iter().any(|(q, _)| q == p)).collect()
            });
            let mut t = ResultTable::new(["x1", "x2", "label"]);
            for i in 0..data.len() {
                let label = match &keep {
                    Some(k) if !k[i] => blank(),
                    _ => (labels[i] as i64).into(),
                };
                t.push(vec![data.features[(i, 0)].into(), data.features[(i, 1)].into(), label])?;
            }
            write(&dir, "simulated_two_cluster.csv", &t)
        }
        SimKind::Factor => {
            let model = synthetic_factor_model(&mut rng);
            let sim = simulate_factor_data(&model, a.n, true, &mut rng)?;
            let p = sim.x.ncols();
            let mut t = ResultTable::new(std::iter::once("label".to_string()).chain((1..=p).map(|j| format!("x{j}"))));
            for i in 0..a.n {
                let mut row = vec![Cell::from(sim.y[i] as i64)];
                row.extend(sim.x.row(i).iter().map(|&v| Cell::from(v)));
                t.push(row)?;
            }
            write(&dir, "simulated_factor.csv", &t)
        }
    }
}

pub fn fit_mixture(g: &GlobalOpts, a: &FitMixtureArgs) -> Result<()> {
    let config = load_config(g, ScenarioId::MixtureFig1)?;
    let dir = out_dir(&config)?;
    let table = read_split(&a.data, "y")?;
    let p = table.dim();
    let prior = if config.mixture.prior.dim() == p + 1 {
        config.mixture.prior.clone()
    } else {
        warn!(
            "configured prior has dimension {}, using the illustrative prior for {} inputs",
            config.mixture.prior.dim(),
            p
        );
        NiwMixturePrior::illustrative(p + 1)
    };
    let labeled: Vec<LabeledPoint> = table.labeled.iter().map(|(x, y)| LabeledPoint::new(*y, x.clone())).collect();
    let unlabeled: Vec<DVector<f64>> = table.unlabeled.iter().map(|x| DVector::from_column_slice(x)).collect();
    let data = SemiSupDataset::new(labeled, unlabeled)?;
    info!("fitting mixture on {} labeled and {} unlabeled rows", data.labeled.len(), data.unlabeled_x.len());
    let samples = mixture::fit_mixture(
        &data,
        &prior,
        MixtureMode::Regression,
        config.mixture.mcmc,
        &mut RngState::new(config.seed),
    )?;

    let rows: Vec<Vec<f64>> =
        table.labeled.iter().map(|(x, _)| x.clone()).chain(table.unlabeled.iter().cloned()).collect();
    let xs: Vec<DVector<f64>> = rows.iter().map(|x| DVector::from_column_slice(x)).collect();
    let means = predictive_regression_curve(&samples, &xs)?;
    let mut t = ResultTable::new(table.inputs.iter().cloned().chain(["labeled".into(), "predictive_mean".into()]));
    for (i, (x, m)) in rows.iter().zip(&means).enumerate() {
        let flag = usize::from(i < table.labeled.len());
        t.push(x.iter().map(|&v| v.into()).chain([flag.into(), (*m).into()]).collect())?;
    }
    write(&dir, "mixture_predictions.csv", &t)?;

    if p == 1 {
        if a.grid_points < 2 {
            return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
        }
        let step = (a.grid_hi - a.grid_lo) / (a.grid_points - 1) as f64;
        let grid: Vec<f64> = (0..a.grid_points).map(|i| a.grid_lo + step * i as f64).collect();
        let xs: Vec<DVector<f64>> = grid.iter().map(|&x| DVector::from_vec(vec![x])).collect();
        let curve = predictive_regression_curve(&samples, &xs)?;
        let mut t = ResultTable::new(["x", "predictive_mean"]);
        for (x, y) in grid.iter().zip(curve) {
            t.push(vec![(*x).into(), y.into()])?;
        }
        write(&dir, "mixture_curve.csv", &t)?;
    }
    Ok(())
}

fn to_matrix(rows: &[Vec<f64>], p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

pub fn fit_factor(g: &GlobalOpts, a: &FitFactorArgs) -> Result<()> {
    let config = load_config(g, ScenarioId::Digits6v9)?;
    let dir = out_dir(&config)?;
    let table = read_split(&a.data, "label")?;
    let labeled = table.binary_labels()?;
    let p = table.dim();
    let x: Vec<Vec<f64>> = labeled.iter().map(|l| l.0.clone()).collect();
    let labels: Vec<bool> = labeled.iter().map(|l| l.1).collect();
    let unlabeled = if a.labeled_only { Vec::new() } else { table.unlabeled.clone() };
    let classifier = FactorClassifier::fit(
        &to_matrix(&x, p),
        &labels,
        &to_matrix(&unlabeled, p),
        &config.digits.factor,
        &mut RngState::new(config.seed),
    )?;
    let targets = match &a.test {
        Some(path) => read_inputs(path)?,
        None => table.unlabeled.clone(),
    };
    let mut t = ResultTable::new(["row", "probability", "predicted"]);
    for (i, row) in targets.iter().enumerate() {
        if row.len() != p {
            return Err(Error::InvalidData(format!("test row {} has {} inputs, expected {p}", i + 1, row.len())));
        }
        let prob = classifier.predict(&DVector::from_column_slice(row))?;
        t.push(vec![i.into(), prob.into(), usize::from(prob > 0.5).into()])?;
    }
    write(&dir, "factor_predictions.csv", &t)
}

pub fn fit_kernel(g: &GlobalOpts, a: &FitKernelArgs) -> Result<()> {
    let config = load_config(g, ScenarioId::KernelSynthetic)?;
    let dir = out_dir(&config)?;
    let table = read_split(&a.data, "label")?;
    let labeled = table.binary_labels()?;
    let unlabeled = if a.labeled_only { Vec::new() } else { table.unlabeled.clone() };
    let all: Vec<Vec<f64>> = labeled.iter().map(|l| l.0.clone()).chain(unlabeled.iter().cloned()).collect();
    let bandwidth = match a.bandwidth {
        Some(b) => b,
        None => median_bandwidth(&all)?,
    };
    let kernel = RbfKernel::new(bandwidth)?;
    info!("kernel bandwidth {bandwidth:.4}");
    let fit: KernelFit = match a.mode {
        KernelModeArg::BayesProbit => {
            rb_fit(&labeled, &unlabeled, &kernel, &config.kernel.settings, &mut RngState::new(config.seed))?
        }
        KernelModeArg::Laprls => {
            let targets: Vec<(Vec<f64>, f64)> =
                labeled.iter().map(|(x, l)| (x.clone(), if *l { 1.0 } else { -1.0 })).collect();
            laprls_fit(&targets, &unlabeled, &kernel, a.gamma_a, a.gamma_i, &LaplacianConfig::default())?
        }
    };

    let rows: Vec<Vec<f64>> = labeled.iter().map(|l| l.0.clone()).chain(table.unlabeled.iter().cloned()).collect();
    let mut t =
        ResultTable::new(table.inputs.iter().cloned().chain(["labeled", "probability", "lo", "hi"].map(String::from)));
    for (i, x) in rows.iter().enumerate() {
        let (p, [lo, hi]) = predict(&fit, x)?;
        let flag = usize::from(i < labeled.len());
        t.push(x.iter().map(|&v| v.into()).chain([flag.into(), p.into(), lo.into(), hi.into()]).collect())?;
    }
    write(&dir, "kernel_predictions.csv", &t)?;

    if table.dim() == 2 {
        let grid = covering_grid(&rows, a.grid_size)?;
        let mut field = ResultTable::new(["x1", "x2", "probability", "lo", "hi"]);
        for [x, y] in grid.nodes() {
            let (p, [lo, hi]) = predict(&fit, &[x, y])?;
            field.push(vec![x.into(), y.into(), p.into(), lo.into(), hi.into()])?;
        }
        write(&dir, "kernel_grid.csv", &field)?;
        let mut contour = ResultTable::new(["x1", "x2"]);
        for [x, y] in decision_contour(&fit, &grid)? {
            contour.push(vec![x.into(), y.into()])?;
        }
        write(&dir, "kernel_contour.csv", &contour)?;
    }
    Ok(())
}

fn predict(fit: &KernelFit, x: &[f64]) -> Result<(f64, [f64; 2])> {
    if fit.n_draws() > 1 {
        rb_predict(fit, x)
    } else {
        let p = fit.probability(x);
        Ok((p, [p, p]))
    }
}

fn print_table(dir: &Path, name: &str) -> Result<()> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    print!("{text}");
    Ok(())
}

pub fn binary_cell(g: &GlobalOpts, a: &BinaryCellArgs) -> Result<()> {
    let mut config = load_config(g, ScenarioId::BinaryCell)?;
    config.scenario = ScenarioId::BinaryCell;
    if let Some(c) = &a.counts {
        let [n00, n01, n10, n11] = c[..] else {
            return Err(Error::InvalidParameter("--counts needs four values n00,n01,n10,n11".into()));
        };
        config.binary.data.labeled = [[n00, n01], [n10, n11]];
    }
    if let Some(m) = &a.unlabeled {
        let [m0, m1] = m[..] else {
            return Err(Error::InvalidParameter("--unlabeled needs two values m0,m1".into()));
        };
        config.binary.data.unlabeled = [m0, m1];
    }
    let dir = out_dir(&config)?;
    run_scenario(&config, &dir)?;
    print_table(&dir, "binary_cell.csv")
}

pub fn analyze_relevance(g: &GlobalOpts, a: &RelevanceArgs) -> Result<()> {
    let mut config = load_config(g, ScenarioId::Relevance)?;
    config.scenario = ScenarioId::Relevance;
    if let Some(spec) = &a.spec {
        config.relevance.spec_file = Some(spec.clone());
    }
    match &config.relevance.spec_file {
        Some(path) => {
            let v = unlabeled_relevant(&SpecFile::read(path)?.build()?)?;
            println!("{}: {}", v.label(), v.explanation());
        }
        None => {
            for case in verdict_catalogue() {
                let v = unlabeled_relevant(&case.spec()?)?;
                println!("{:<28} {}", case.name, v.label());
            }
        }
    }
    let dir = out_dir(&config)?;
    run_scenario(&config, &dir)?;
    Ok(())
}

pub fn sweep(g: &GlobalOpts, a: &SweepArgs) -> Result<()> {
    let mut config = load_config(g, ScenarioId::KernelSynthetic)?;
    if let Some(f) = &a.fractions {
        config.labeled_fractions = f.clone();
        config.labeled_count = None;
        config.validate()?;
    }
    let dir = out_dir(&config)?;
    let cells = match config.scenario {
        ScenarioId::KernelSynthetic => {
            let data = LabeledPoints::two_cluster(
                config.kernel.n_points,
                config.kernel.noise,
                &mut RngState::new(config.seed),
            )?;
            run_sweep(&config, &data, &KernelSweepModel(config.kernel.settings))?
        }
        ScenarioId::Digits6v9 => {
            let data = match DigitsSource::load(&config)? {
                DigitsSource::Synthetic => {
                    let task = synthetic_factor_task(
                        2 * config.digits.pool_per_class,
                        config.digits.synthetic_test_size,
                        &mut RngState::new(config.seed),
                    )?;
                    rows_to_points(&task.test, &task.test_labels)
                }
                DigitsSource::Images { pool, pool_labels, .. } => rows_to_points(&pool, &pool_labels),
            };
            run_sweep(&config, &data, &FactorSweepModel(config.digits.factor))?
        }
        other => return Err(Error::Config(format!("no sweep is defined for scenario {other}"))),
    };
    for c in &cells {
        info!(
            "fraction {:.2}: labeled-only {:.4}, semisupervised {:.4} ({} failures)",
            c.labeled_fraction, c.error_labeled_only, c.error_semisupervised, c.failures
        );
    }
    write(&dir, "sweep.csv", &sweep_table(&cells))
}

fn rows_to_points(rows: &DMatrix<f64>, labels: &[bool]) -> LabeledPoints {
    LabeledPoints {
        points: (0..rows.nrows()).map(|i| rows.row(i).iter().copied().collect()).collect(),
        labels: labels.to_vec(),
    }
}

pub fn scenario(g: &GlobalOpts, a: &ScenarioArgs) -> Result<()> {
    let id = ScenarioId::parse(&a.name)?;
    let mut config = load_config(g, id)?;
    if config.scenario != id {
        if g.config.is_some() {
            warn!("configuration is for {}, running {id}", config.scenario);
        }
        config.scenario = id;
    }
    if a.synthetic {
        config.digits.synthetic = true;
    }
    let dir = out_dir(&config)?;
    let out = run_scenario(&config, &dir)?;
    for f in &out.files {
        println!("{}", f.display());
    }
    println!("{}", out.manifest.display());
    Ok(())
}
