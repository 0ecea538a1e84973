mod common;

use common::aggregated_oracle;
use proptest::prelude::*;
use rand::Rng;
use semisup_core::binary::{
    cells_to_phi_theta, conditional_prior_weight, dirichlet_phi_theta_independence_check, mixture_by_expansion,
    mixture_by_quadrature, phi_theta_independence_check, posterior_predictive, CellPrior, CountData, PredictiveMethod,
};
use semisup_core::RngState;

fn random_counts(rng: &mut RngState, max: u64) -> CountData {
    let mut c = || rng.random_range(0..=max);
    CountData::new([[c(), c()], [c(), c()]], [c(), c()])
}

#[test]
fn closed_forms_on_random_grid() {
    let mut rng = RngState::new(1);
    for _ in 0..200 {
        let d = random_counts(&mut rng, 30);
        let x: u8 = rng.random_range(0..2);
        let beta = [rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)];
        let prior = CellPrior::ProductBeta { phi0: beta, phi1: [beta[1], beta[0]], theta: [1.0, 1.0] };
        let ab = if x == 1 { [beta[1], beta[0]] } else { beta };
        let n = d.labeled[x as usize];
        let want = (ab[0] + n[1] as f64) / (ab[0] + ab[1] + (n[0] + n[1]) as f64);
        let got = posterior_predictive(&prior, &d, x).unwrap();
        assert!((got.probability - want).abs() < 1e-12);
        assert_eq!(got.method, PredictiveMethod::ClosedForm);

        let alpha = [
            rng.random_range(0.1..5.0),
            rng.random_range(0.1..5.0),
            rng.random_range(0.1..5.0),
            rng.random_range(0.1..5.0),
        ];
        let (f, s) = if x == 1 { (2, 3) } else { (0, 1) };
        let want = (alpha[s] + n[1] as f64) / (alpha[s] + alpha[f] + (n[0] + n[1]) as f64);
        let got = posterior_predictive(&CellPrior::Dirichlet { alpha }, &d, x).unwrap();
        assert!((got.probability - want).abs() < 1e-12);
    }
}

#[test]
fn expansion_matches_aggregated_oracle() {
    let mut rng = RngState::new(2);
    for _ in 0..200 {
        let d = random_counts(&mut rng, 16);
        let x = rng.random_range(0..2usize);
        let mut q = || [0; 4].map(|_: i32| rng.random_range(0.2..6.0));
        let (dir0, dir1) = (q(), q());
        let a = 0.3;
        let prior = CellPrior::DirichletMixture { a, dir0, dir1 };
        let got = mixture_by_expansion(&prior, &d, x).unwrap();
        let want = aggregated_oracle(a, dir0, dir1, &d, x);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn quadrature_matches_oracle_beyond_cap() {
    let prior = CellPrior::DirichletMixture { a: 0.5, dir0: [9.0, 1.0, 1.0, 9.0], dir1: [1.0, 9.0, 9.0, 1.0] };
    let (dir0, dir1) = ([9.0, 1.0, 1.0, 9.0], [1.0, 9.0, 9.0, 1.0]);
    for d in [
        CountData::new([[3, 2], [1, 4]], [40, 60]),
        CountData::new([[0, 1], [5, 0]], [500, 20]),
        CountData::new([[20, 3], [2, 30]], [1000, 1500]),
    ] {
        let p = posterior_predictive(&prior, &d, 1).unwrap();
        assert_eq!(p.method, PredictiveMethod::Quadrature);
        let want = aggregated_oracle(0.5, dir0, dir1, &d, 1);
        assert!((p.probability - want).abs() < 1e-6, "{} vs {want}", p.probability);
        let q = mixture_by_quadrature(&prior, &d, 0).unwrap();
        assert!((q - aggregated_oracle(0.5, dir0, dir1, &d, 0)).abs() < 1e-6);
    }
}

#[test]
fn unlabeled_counts_move_mixture_prediction() {
    let prior = CellPrior::DirichletMixture { a: 0.5, dir0: [16.0, 2.0, 1.0, 1.0], dir1: [1.0, 1.0, 2.0, 16.0] };
    let labeled = CountData::new([[2, 1], [1, 2]], [0, 0]);
    let with = CountData::new([[2, 1], [1, 2]], [3, 12]);
    let a = posterior_predictive(&prior, &labeled, 1).unwrap().probability;
    let b = posterior_predictive(&prior, &with, 1).unwrap().probability;
    assert!((b - a).abs() > 1e-3);
}

#[test]
fn conditional_weight_matches_monte_carlo() {
    let prior = CellPrior::DirichletMixture { a: 0.5, dir0: [1.0; 4], dir1: [2.0; 4] };
    let theta = 0.3;
    let w = conditional_prior_weight(&prior, theta).unwrap();
    let mut rng = RngState::new(3);
    let half = 0.01;
    let (mut hit0, mut hits) = (0u64, 0u64);
    for _ in 0..1_000_000 {
        let first = rng.random::<f64>() < 0.5;
        let alpha = if first { [1.0; 4] } else { [2.0; 4] };
        let pi = CellPrior::Dirichlet { alpha }.sample_cells(&mut rng).unwrap();
        let (_, _, t) = cells_to_phi_theta(&pi);
        if (t - theta).abs() < half {
            hits += 1;
            hit0 += first as u64;
        }
    }
    let est = hit0 as f64 / hits as f64;
    let se = (est * (1.0 - est) / hits as f64).sqrt();
    // window averaging bias is far below the Monte Carlo error at this width
    assert!((est - w).abs() < 3.0 * se + 1e-3, "{est} vs {w} (se {se})");
}

#[test]
fn single_dirichlet_is_independent() {
    // a 5% test rejects more than 3 of 10 runs with probability about 1e-3
    let rejections = (0..10)
        .filter(|&s| {
            dirichlet_phi_theta_independence_check([1.0, 2.0, 3.0, 4.0], 10_000, &mut RngState::new(40 + s))
                .unwrap()
                .rejects()
        })
        .count();
    assert!(rejections <= 3, "{rejections} rejections");
}

#[test]
fn equal_theta_marginals_stay_independent() {
    // (ϕ0, ϕ1) differ between components but θ ~ Beta(10, 10) under both
    let prior = CellPrior::DirichletMixture { a: 0.5, dir0: [9.0, 1.0, 1.0, 9.0], dir1: [1.0, 9.0, 9.0, 1.0] };
    let rejections = (0..10)
        .filter(|&s| phi_theta_independence_check(&prior, 10_000, 99, &mut RngState::new(60 + s)).unwrap().rejects())
        .count();
    assert!(rejections <= 3, "{rejections} rejections");
}

#[test]
fn separated_mixture_is_dependent() {
    let prior = CellPrior::DirichletMixture { a: 0.5, dir0: [16.0, 2.0, 1.0, 1.0], dir1: [1.0, 1.0, 2.0, 16.0] };
    let t = phi_theta_independence_check(&prior, 10_000, 99, &mut RngState::new(5)).unwrap();
    assert!(t.rejects(), "{t:?}");
}

proptest! {
    #[test]
    fn product_beta_monotone_in_successes(
        n in prop::array::uniform4(0u64..50),
        m in prop::array::uniform2(0u64..50),
        a in 0.1f64..10.0,
        b in 0.1f64..10.0,
        x in 0u8..2,
    ) {
        let prior = CellPrior::ProductBeta { phi0: [a, b], phi1: [b, a], theta: [1.0, 1.0] };
        let d = CountData::new([[n[0], n[1]], [n[2], n[3]]], m);
        let mut more = d;
        more.labeled[x as usize][1] += 1;
        let p = posterior_predictive(&prior, &d, x).unwrap().probability;
        let q = posterior_predictive(&prior, &more, x).unwrap().probability;
        prop_assert!(q >= p);
    }

    #[test]
    fn conjugate_priors_ignore_unlabeled(
        n in prop::array::uniform4(0u64..100),
        m in prop::array::uniform2(0u64..1000),
        alpha in prop::array::uniform4(0.05f64..20.0),
        x in 0u8..2,
    ) {
        let d = CountData::new([[n[0], n[1]], [n[2], n[3]]], m);
        for prior in [
            CellPrior::Dirichlet { alpha },
            CellPrior::ProductBeta { phi0: [alpha[0], alpha[1]], phi1: [alpha[2], alpha[3]], theta: [alpha[0], alpha[3]] },
        ] {
            let with = posterior_predictive(&prior, &d, x).unwrap().probability;
            let without = posterior_predictive(&prior, &d.without_unlabeled(), x).unwrap().probability;
            prop_assert_eq!(with, without);
        }
    }

    #[test]
    fn expansion_and_quadrature_agree(
        n in prop::array::uniform4(0u64..10),
        m in prop::array::uniform2(0u64..30),
        dir0 in prop::array::uniform4(0.5f64..8.0),
        dir1 in prop::array::uniform4(0.5f64..8.0),
        a in 0.05f64..0.95,
        x in 0usize..2,
    ) {
        let prior = CellPrior::DirichletMixture { a, dir0, dir1 };
        let d = CountData::new([[n[0], n[1]], [n[2], n[3]]], m);
        let e = mixture_by_expansion(&prior, &d, x).unwrap();
        let q = mixture_by_quadrature(&prior, &d, x).unwrap();
        prop_assert!((e - q).abs() < 1e-6);
    }
}
