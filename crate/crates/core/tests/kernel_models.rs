mod common;

use common::LapRlsInstance;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semisup_core::kernel::*;
use semisup_core::probit::probit_gibbs;
use semisup_core::stochastics::special::normal_cdf;
use semisup_core::stochastics::{standard_normal, RngState, SpdMatrix};

fn random_points(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngState::new(seed);
    (0..n).map(|_| vec![standard_normal(&mut rng), standard_normal(&mut rng)]).collect()
}

fn benchmark_set() -> LabeledPoints {
    LabeledPoints::two_cluster(TWO_CLUSTER_SIZE, TWO_CLUSTER_NOISE, &mut RngState::new(7)).unwrap()
}

#[test]
fn gram_is_symmetric_unit_diagonal_psd() {
    let pts = random_points(30, 1);
    let k = kernel_matrix(&pts, &pts, &RbfKernel::new(0.8).unwrap()).unwrap();
    assert_eq!(k, k.transpose());
    assert!(k.diagonal().iter().all(|&d| d == 1.0));
    assert!(SymmetricEigen::new(k).eigenvalues.min() >= -1e-8);
}

#[test]
fn laplacian_identities() {
    let pts = random_points(12, 2);
    let mut rng = RngState::new(3);
    for knn in [None, Some(3)] {
        let g = graph_laplacian(&pts, 0.7, knn).unwrap();
        assert_eq!(g.laplacian, g.laplacian.transpose());
        for i in 0..12 {
            assert!(g.laplacian.row(i).sum().abs() < 1e-10);
        }
        assert!(SymmetricEigen::new(g.laplacian.clone()).eigenvalues.min() >= -1e-8);
        let f: Vec<f64> = (0..12).map(|_| standard_normal(&mut rng)).collect();
        let mut direct = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                direct += 0.5 * g.weights[(i, j)] * (f[i] - f[j]).powi(2);
            }
        }
        assert!((g.quadratic_form(&f) - direct).abs() < 1e-10);
    }
}

#[test]
fn labeled_only_fit_matches_direct_gram_prior_construction() {
    let data = benchmark_set();
    let mut labeled: Vec<(Vec<f64>, bool)> = (0..6).map(|i| (data.points[i].clone(), data.labels[i])).collect();
    labeled.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    let kernel = RbfKernel::new(0.9).unwrap();
    let settings = RbSettings { graph_weight: 0.0, n_burn: 20, n_keep: 30, ..RbSettings::default() };
    let fit = rb_fit(&labeled, &[], &kernel, &settings, &mut RngState::new(5)).unwrap();

    // w ~ N(0, g K⁻¹) written as w = K⁻¹ chol(g K) e
    let x: Vec<Vec<f64>> = labeled.iter().map(|p| p.0.clone()).collect();
    let n = x.len();
    let kb = kernel_matrix(&x, &x, &kernel).unwrap() + DMatrix::identity(n, n) * 1e-6;
    let kinv = kb.clone().try_inverse().unwrap();
    let root = SpdMatrix::new(&kb * settings.prior_scale + DMatrix::identity(n, n) * 1e-9).unwrap().chol_factor();
    let to_w = &kinv * root;
    let feat = kernel_matrix(&x, &x, &kernel).unwrap() * &to_w;
    let design = DMatrix::from_fn(n, n + 1, |i, j| if j == 0 { 1.0 } else { feat[(i, j - 1)] });
    let mut prec = DMatrix::identity(n + 1, n + 1);
    prec[(0, 0)] = 0.25;
    let y: Vec<bool> = labeled.iter().map(|p| p.1).collect();
    let draws = probit_gibbs(&design, &y, &prec, 20, 30, &mut RngState::new(5)).unwrap();
    for (d, (w, b)) in draws.iter().zip(fit.weights.iter().zip(&fit.intercepts)) {
        assert!((d[0] - b).abs() < 1e-8);
        let wd = &to_w * d.rows(1, n);
        for i in 0..n {
            assert!((wd[i] - w[i]).abs() < 1e-6 * (1.0 + wd[i].abs()), "{} vs {}", wd[i], w[i]);
        }
    }
}

#[test]
fn two_distant_points_land_on_their_sides() {
    let labeled = vec![(vec![-3.0, 0.0], false), (vec![3.0, 0.0], true)];
    let fit = rb_fit(
        &labeled,
        &[],
        &RbfKernel::new(1.0).unwrap(),
        &RbSettings { n_keep: 2000, ..RbSettings::default() },
        &mut RngState::new(9),
    )
    .unwrap();
    assert!(fit.probability(&[-3.0, 0.0]) < 0.5);
    assert!(fit.probability(&[3.0, 0.0]) > 0.5);
}

#[test]
fn full_label_training_accuracy() {
    let data = benchmark_set();
    let labeled: Vec<(Vec<f64>, bool)> = data.points.iter().cloned().zip(data.labels.iter().copied()).collect();
    let fit = rb_fit_default_bandwidth(&labeled, &[], &RbSettings::default(), &mut RngState::new(11)).unwrap();
    assert!(1.0 - data.error_rate(&fit) >= 0.95);
}

#[test]
fn credible_intervals_are_ordered() {
    let data = benchmark_set();
    let split = data.split(2, &mut RngState::new(12)).unwrap();
    let fit = rb_fit_default_bandwidth(
        &split.labeled,
        &split.unlabeled.points,
        &RbSettings::default(),
        &mut RngState::new(13),
    )
    .unwrap();
    for x in &data.points {
        let (p, [lo, hi]) = rb_predict(&fit, x).unwrap();
        assert!((0.0..=1.0).contains(&p) && 0.0 <= lo && lo <= hi && hi <= 1.0);
    }
}

#[test]
fn contour_of_first_coordinate() {
    let grid = Grid2d::new((-2.0, 2.0), 41, (-1.0, 1.0), 11).unwrap();
    let pts = level_crossings(&grid, 0.5, |x, _| normal_cdf(x)).unwrap();
    assert_eq!(pts.len(), 11);
    assert!(pts.iter().all(|p| p[0].abs() < grid.cell_width()));
}

#[test]
fn contour_points_sit_on_the_half_level() {
    let data = benchmark_set();
    let split = data.split(4, &mut RngState::new(14)).unwrap();
    let fit = rb_fit_default_bandwidth(
        &split.labeled,
        &split.unlabeled.points,
        &RbSettings::default(),
        &mut RngState::new(15),
    )
    .unwrap();
    let grid = covering_grid(&data.points, 60).unwrap();
    let pts = decision_contour(&fit, &grid).unwrap();
    assert!(!pts.is_empty());
    for p in &pts {
        assert!((fit.probability(p) - 0.5).abs() < 0.02, "{p:?}");
    }
}

#[test]
fn constant_fit_has_empty_contour() {
    let fit = KernelFit {
        mode: KernelMode::BayesProbit,
        kernel: RbfKernel::new(1.0).unwrap(),
        base_points: vec![vec![0.0, 0.0]],
        weights: vec![vec![0.0]],
        intercepts: vec![0.5244005127080407],
        config: KernelConfigSnapshot {
            bandwidth: 1.0,
            prior_scale: None,
            graph_weight: None,
            gamma_a: None,
            gamma_i: None,
        },
    };
    assert!((fit.probability(&[0.3, 0.1]) - 0.7).abs() < 1e-12);
    assert!(decision_contour(&fit, &Grid2d::new((-1.0, 1.0), 9, (-1.0, 1.0), 9).unwrap()).unwrap().is_empty());
}

#[test]
fn laprls_without_manifold_is_kernel_ridge() {
    let inst = LapRlsInstance::random(&mut ChaCha8Rng::seed_from_u64(1), 5, 5);
    let n = inst.labeled.len();
    let x: Vec<Vec<f64>> = inst.labeled.iter().map(|p| p.0.clone()).collect();
    let kernel = RbfKernel::new(inst.bandwidth).unwrap();
    let fit = laprls_fit(&inst.labeled, &inst.unlabeled, &kernel, 0.1, 0.0, &LaplacianConfig::default()).unwrap();
    let k = kernel_matrix(&x, &x, &kernel).unwrap();
    let y = DVector::from_iterator(n, inst.labeled.iter().map(|p| p.1));
    let ridge = (k + DMatrix::identity(n, n) * (0.1 * n as f64)).lu().solve(&y).unwrap();
    for i in 0..n {
        assert!((fit.weights[0][i] - ridge[i]).abs() < 1e-10);
    }
    assert!(fit.weights[0][n..].iter().all(|w| w.abs() < 1e-10));
}

#[test]
fn huge_ridge_shrinks_to_zero() {
    let inst = LapRlsInstance::random(&mut ChaCha8Rng::seed_from_u64(2), 5, 5);
    let kernel = RbfKernel::new(inst.bandwidth).unwrap();
    let fit = laprls_fit(&inst.labeled, &inst.unlabeled, &kernel, 1e12, 1.0, &LaplacianConfig::default()).unwrap();
    assert!(fit.weights[0].iter().all(|w| w.abs() < 1e-10));
    assert!(fit.latent_values(&[1.0, 1.0])[0].abs() < 1e-10);
}

#[test]
fn laprls_matches_gradient_descent_on_a_small_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut inst = LapRlsInstance::random(&mut rng, 4, 3);
    while inst.labeled.len() != 4 || inst.unlabeled.len() != 3 {
        inst = LapRlsInstance::random(&mut rng, 4, 3);
    }
    let kernel = RbfKernel::new(inst.bandwidth).unwrap();
    let fit =
        laprls_fit(&inst.labeled, &inst.unlabeled, &kernel, inst.gamma_a, inst.gamma_i, &LaplacianConfig::default())
            .unwrap();
    let exact = inst.objective(&fit.weights[0]);
    let oracle = inst.objective(&inst.minimize());
    assert!((exact - oracle).abs() <= 1e-6 * oracle.abs().max(1e-12), "{exact} vs {oracle}");
}

#[test]
fn laprls_zero_ridge_is_singular() {
    let inst = LapRlsInstance::random(&mut ChaCha8Rng::seed_from_u64(4), 3, 3);
    let mut inst = inst;
    inst.unlabeled.push(vec![0.5, 0.5]);
    let err = laprls_fit(
        &inst.labeled,
        &inst.unlabeled,
        &RbfKernel::new(1.0).unwrap(),
        0.0,
        0.0,
        &LaplacianConfig::default(),
    )
    .unwrap_err();
    assert!(err.is_numerical());
}

#[test]
fn unlabeled_base_points_lower_error() {
    let data = benchmark_set();
    let root = RngState::new(20260102);
    let plain = RbSettings { graph_weight: 0.0, ..RbSettings::default() };
    let (mut lab, mut semi, mut lab_plain) = (0.0, 0.0, 0.0);
    for rep in 0..50 {
        let mut rng = root.child(rep);
        let split = data.split(2, &mut rng).unwrap();
        let c = compare_on_split(&split, &RbSettings::default(), &mut rng.clone()).unwrap();
        lab += c.labeled_only;
        semi += c.semisupervised;
        lab_plain += compare_on_split(&split, &plain, &mut rng).unwrap().labeled_only;
    }
    let (lab, semi, lab_plain) = (lab / 50.0, semi / 50.0, lab_plain / 50.0);
    assert!(semi + 0.02 <= lab, "labeled-only {lab:.3}, semisupervised {semi:.3}");
    assert!(semi + 0.02 <= lab_plain, "graph-free labeled-only {lab_plain:.3}, semisupervised {semi:.3}");
}

fn permuted<T: Clone>(v: &[T], seed: u64) -> Vec<T> {
    use rand::seq::SliceRandom;
    let mut out = v.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn base_point_order_does_not_matter(seed in 0u64..500) {
        let data = benchmark_set();
        let split = data.split(3, &mut RngState::new(seed)).unwrap();
        let settings = RbSettings { n_burn: 20, n_keep: 40, ..RbSettings::default() };
        let a = rb_fit_default_bandwidth(&split.labeled, &split.unlabeled.points, &settings, &mut RngState::new(seed)).unwrap();
        let lp = permuted(&split.labeled, seed);
        let up = permuted(&split.unlabeled.points, seed + 1);
        let b = rb_fit_default_bandwidth(&lp, &up, &settings, &mut RngState::new(seed)).unwrap();
        for x in data.points.iter().take(10) {
            prop_assert!((a.probability(x) - b.probability(x)).abs() < 1e-10);
        }

        let reg: Vec<(Vec<f64>, f64)> = split.labeled.iter().map(|(x, y)| (x.clone(), if *y { 1.0 } else { -1.0 })).collect();
        let kernel = RbfKernel::new(0.5).unwrap();
        let cfg = LaplacianConfig { bandwidth: Some(0.3), knn: Some(5) };
        let la = laprls_fit(&reg, &split.unlabeled.points, &kernel, 0.01, 1.0, &cfg).unwrap();
        let lb = laprls_fit(&permuted(&reg, seed), &up, &kernel, 0.01, 1.0, &cfg).unwrap();
        for x in data.points.iter().take(10) {
            prop_assert!((la.latent_values(x)[0] - lb.latent_values(x)[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn laprls_is_stationary_and_beats_the_ridge_solution(seed in any::<u64>()) {
        let inst = LapRlsInstance::random(&mut ChaCha8Rng::seed_from_u64(seed), 5, 5);
        let kernel = RbfKernel::new(inst.bandwidth).unwrap();
        let fit = laprls_fit(&inst.labeled, &inst.unlabeled, &kernel, inst.gamma_a, inst.gamma_i, &LaplacianConfig::default()).unwrap();
        let ridge = laprls_fit(&inst.labeled, &inst.unlabeled, &kernel, inst.gamma_a, 0.0, &LaplacianConfig::default()).unwrap();
        let grad = inst.gradient(&fit.weights[0]);
        let zero = vec![0.0; grad.len()];
        let scale = inst.gradient(&zero).iter().map(|v| v * v).sum::<f64>().sqrt();
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(gnorm <= 1e-8 * scale.max(1e-300));
        prop_assert!(inst.objective(&fit.weights[0]) <= inst.objective(&ridge.weights[0]) + 1e-12);
    }
}
